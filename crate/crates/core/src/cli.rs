//! Command-line front end.
//!
//! Every command resolves a [`RunConfig`] (JSON file, then flags on top),
//! calls the library, and returns the files it would write as
//! [`CommandOutput`]. The binary only parses arguments and writes files.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_growth, detect_cycle, CycleReport, GrowthCriteria, GrowthVerdict};
use crate::error::{Error, Result};
use crate::integrator::{
    format_number, integrate_autonomous, integrate_forced, integrate_schedule, IntegrationConfig, Termination,
};
use crate::model::{potential, potential_extrema, ModelParams, State};
use crate::stability;
use crate::sweep::{
    boundary_csv, extract_boundary, fit_threshold, parse_boundary_csv, run_sweep_with_jobs, AxisRange, SweepSpec,
    ThresholdFit, REFERENCE_CURVE,
};

#[derive(Debug, Parser)]
#[command(name = "tumordyn", version, about = "Tumor-lymphocyte dynamics under periodic immunotherapy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one trajectory and classify tumor growth.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Integrate the four-dimensional autonomous lift instead.
        #[arg(long)]
        extended: bool,
        /// Stop treatment at this time.
        #[arg(long)]
        off_at: Option<f64>,
    },
    /// Fixed points, eigenvalues and their classification.
    Stability {
        #[command(flatten)]
        common: CommonArgs,
        /// Report the fixed points of the autonomous lift.
        #[arg(long)]
        extended: bool,
    },
    /// Tabulate the mechanical-analogue potential.
    Potential {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// `(V, β)` phase diagram, threshold boundary and hyperbolic fit.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        v_min: Option<f64>,
        #[arg(long)]
        v_max: Option<f64>,
        #[arg(long)]
        v_n: Option<usize>,
        #[arg(long)]
        beta_min: Option<f64>,
        #[arg(long)]
        beta_max: Option<f64>,
        #[arg(long)]
        beta_n: Option<usize>,
        /// Only boundary points with β at or above this value enter the fit.
        #[arg(long)]
        fit_beta_min: Option<f64>,
    },
    /// Fit `V = A + B/(C + β)^p` to boundary points.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        /// Boundary CSV (`beta,V_threshold,monotone`).
        #[arg(long, conflicts_with = "synthetic")]
        input: Option<PathBuf>,
        /// Sample this many points from the reference threshold curve instead.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long)]
        fit_beta_min: Option<f64>,
    },
    /// Detect a limit cycle of the treated system.
    Cycle {
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate { common, .. }
            | Command::Stability { common, .. }
            | Command::Potential { common, .. }
            | Command::Sweep { common, .. }
            | Command::Fit { common, .. }
            | Command::Cycle { common } => common,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long = "V", alias = "v")]
    pub dose: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long)]
    pub y0: Option<f64>,
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub sample_dt: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config with sections model, initial, integration, sweep, output.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub alpha: Option<f64>,
    pub k: Option<f64>,
    pub sigma: Option<f64>,
    #[serde(rename = "V")]
    pub dose: Option<f64>,
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: Option<f64>,
    pub y0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub v_range: Option<AxisRange>,
    pub beta_range: Option<AxisRange>,
    pub fit_beta_min: Option<f64>,
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Full run configuration as read from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Lowest β used by the sweep's threshold fit unless configured otherwise.
pub const DEFAULT_FIT_BETA_MIN: f64 = 0.2;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Config file (if any) with flags applied on top.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::load(path)?,
            None => Self::default(),
        };
        cfg.apply_flags(args);
        Ok(cfg)
    }

    pub fn apply_flags(&mut self, a: &CommonArgs) {
        let set = |slot: &mut Option<f64>, v: Option<f64>| {
            if v.is_some() {
                *slot = v;
            }
        };
        set(&mut self.model.alpha, a.alpha);
        set(&mut self.model.k, a.k);
        set(&mut self.model.sigma, a.sigma);
        set(&mut self.model.dose, a.dose);
        set(&mut self.model.beta, a.beta);
        set(&mut self.initial.x0, a.x0);
        set(&mut self.initial.y0, a.y0);
        let i = &mut self.integration;
        i.t_end = a.t_end.unwrap_or(i.t_end);
        i.rel_tol = a.rel_tol.unwrap_or(i.rel_tol);
        i.abs_tol = a.abs_tol.unwrap_or(i.abs_tol);
        i.sample_dt = a.sample_dt.unwrap_or(i.sample_dt);
        if a.out.is_some() {
            self.output.dir = a.out.clone();
        }
        if a.jobs.is_some() {
            self.sweep.jobs = a.jobs;
        }
    }

    pub fn model(&self) -> Result<ModelParams> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("missing model parameter `{name}`")));
        let p = ModelParams {
            alpha: need(self.model.alpha, "alpha")?,
            k: need(self.model.k, "k")?,
            sigma: need(self.model.sigma, "sigma")?,
            dose: self.model.dose.unwrap_or(0.0),
            beta: self.model.beta.unwrap_or(0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn initial(&self) -> Result<State> {
        match (self.initial.x0, self.initial.y0) {
            (Some(x), Some(y)) if x.is_finite() && y.is_finite() && x >= 0.0 => Ok(State::new(x, y)),
            (Some(_), Some(_)) => Err(Error::Config("initial condition must be finite with x0 >= 0".into())),
            _ => Err(Error::Config("initial condition needs both x0 and y0".into())),
        }
    }

    pub fn integration(&self) -> Result<IntegrationConfig> {
        self.integration.validate()?;
        Ok(self.integration)
    }
}

/// Files produced by a command plus the summary printed to stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub files: Vec<(String, String)>,
    pub summary: String,
}

impl CommandOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            std::fs::write(dir.join(name), content)?;
        }
        Ok(())
    }
}

fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct SimulationReport {
    params: ModelParams,
    initial: State,
    termination: Termination,
    verdict: Option<GrowthVerdict>,
    verdict_error: Option<String>,
    oscillator_drift: Option<f64>,
    off_at: Option<f64>,
}

pub fn cmd_simulate(cfg: &RunConfig, extended: bool, off_at: Option<f64>) -> Result<CommandOutput> {
    let p = cfg.model()?;
    let s0 = cfg.initial()?;
    let icfg = cfg.integration()?;
    let criteria = GrowthCriteria::default();
    let (csv, termination, verdict, drift) = if extended {
        if off_at.is_some() {
            return Err(Error::Config("--off-at is not available with --extended".into()));
        }
        let traj = integrate_autonomous(s0.extend(), &p, &icfg)?;
        (traj.to_csv(), traj.termination.clone(), classify_growth(&traj, &criteria), traj.oscillator_drift)
    } else {
        let traj = match off_at {
            Some(t) => integrate_schedule(s0, &p, &icfg, t)?,
            None => integrate_forced(s0, &p, &icfg)?,
        };
        (traj.to_csv(), traj.termination.clone(), classify_growth(&traj, &criteria), None)
    };
    let (verdict, verdict_error) = match verdict {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = to_json(&SimulationReport {
        params: p,
        initial: s0,
        termination,
        verdict,
        verdict_error,
        oscillator_drift: drift,
        off_at,
    });
    Ok(CommandOutput {
        files: vec![("trajectory.csv".into(), csv), ("verdict.json".into(), report.clone())],
        summary: report,
    })
}

pub fn cmd_stability(cfg: &RunConfig, extended: bool) -> Result<CommandOutput> {
    let p = cfg.model()?;
    let json = to_json(&stability::report(&p, extended));
    Ok(CommandOutput {
        files: vec![("stability.json".into(), json.clone())],
        summary: json,
    })
}

#[derive(Debug, Serialize)]
struct ExtremaReport {
    params: ModelParams,
    extrema: Option<crate::model::PotentialShape>,
    error: Option<String>,
}

pub fn cmd_potential(cfg: &RunConfig, x_min: Option<f64>, x_max: Option<f64>, points: usize) -> Result<CommandOutput> {
    let p = cfg.model()?;
    if points < 2 {
        return Err(Error::Config("--points must be at least 2".into()));
    }
    let shape = potential_extrema(&p);
    let x_min = x_min.unwrap_or(0.0);
    let x_max = x_max.unwrap_or(match &shape {
        Ok(s) if s.x2 > 0.0 => 2.0 * s.x2,
        _ => 5.0,
    });
    if !(x_max > x_min) {
        return Err(Error::Config(format!("empty x range [{x_min}, {x_max}]")));
    }
    let mut csv = String::from("x,U\n");
    for i in 0..points {
        let x = x_min + (x_max - x_min) * i as f64 / (points - 1) as f64;
        csv.push_str(&format!("{},{}\n", format_number(x), format_number(potential(x, &p))));
    }
    let (extrema, error) = match shape {
        Ok(s) => (Some(s), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let json = to_json(&ExtremaReport {
        params: p,
        extrema,
        error,
    });
    Ok(CommandOutput {
        files: vec![("potential.csv".into(), csv), ("extrema.json".into(), json.clone())],
        summary: json,
    })
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    spec: SweepSpec,
    controllable: usize,
    uncontrollable: usize,
    failed: usize,
    boundary_points: usize,
    fit_beta_min: f64,
    fit: Option<ThresholdFit>,
    fit_error: Option<String>,
}

/// Sweep specification resolved from the config and the per-command axis flags.
pub fn sweep_spec(cfg: &RunConfig, v: [Option<f64>; 2], v_n: Option<usize>, b: [Option<f64>; 2], b_n: Option<usize>) -> Result<SweepSpec> {
    let mut spec = SweepSpec::new(cfg.model()?, cfg.initial()?);
    spec.integration = cfg.integration()?;
    if let Some(r) = cfg.sweep.v_range {
        spec.v_range = r;
    }
    if let Some(r) = cfg.sweep.beta_range {
        spec.beta_range = r;
    }
    spec.v_range.min = v[0].unwrap_or(spec.v_range.min);
    spec.v_range.max = v[1].unwrap_or(spec.v_range.max);
    spec.v_range.n = v_n.unwrap_or(spec.v_range.n);
    spec.beta_range.min = b[0].unwrap_or(spec.beta_range.min);
    spec.beta_range.max = b[1].unwrap_or(spec.beta_range.max);
    spec.beta_range.n = b_n.unwrap_or(spec.beta_range.n);
    spec.validate()?;
    Ok(spec)
}

pub fn cmd_sweep(cfg: &RunConfig, spec: &SweepSpec, fit_beta_min: Option<f64>) -> Result<CommandOutput> {
    let grid = run_sweep_with_jobs(spec, cfg.sweep.jobs)?;
    let boundary = extract_boundary(&grid);
    let fit_beta_min = fit_beta_min.or(cfg.sweep.fit_beta_min).unwrap_or(DEFAULT_FIT_BETA_MIN);
    let pts: Vec<(f64, f64)> = boundary
        .iter()
        .filter(|b| b.beta >= fit_beta_min)
        .map(|b| (b.beta, b.v_threshold))
        .collect();
    let (fit, fit_error) = match fit_threshold(&pts) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let mut files = vec![
        ("grid.csv".to_owned(), grid.to_csv()),
        ("boundary.csv".to_owned(), boundary_csv(&boundary)),
    ];
    if let Some(f) = &fit {
        files.push(("fit.json".into(), to_json(f)));
    }
    let summary = to_json(&SweepSummary {
        spec: *spec,
        controllable: grid.count(|c| c.label() == "controllable"),
        uncontrollable: grid.count(|c| c.label() == "uncontrollable"),
        failed: grid.count(|c| c.label() == "failed"),
        boundary_points: boundary.len(),
        fit_beta_min,
        fit,
        fit_error,
    });
    Ok(CommandOutput { files, summary })
}

/// Points sampled from the reference curve over `β ∈ [0, 2.85]`.
pub fn reference_points(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let beta = 2.85 * i as f64 / (n.max(2) - 1) as f64;
            (beta, REFERENCE_CURVE.eval(beta))
        })
        .collect()
}

pub fn cmd_fit(input: Option<&Path>, synthetic: Option<usize>, beta_min: Option<f64>) -> Result<CommandOutput> {
    let pts: Vec<(f64, f64)> = match (input, synthetic) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_boundary_csv(&text)?
                .into_iter()
                .map(|b| (b.beta, b.v_threshold))
                .collect()
        }
        (None, Some(n)) => reference_points(n),
        _ => return Err(Error::Config("fit needs exactly one of --input or --synthetic".into())),
    };
    let beta_min = beta_min.unwrap_or(f64::NEG_INFINITY);
    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|p| p.0 >= beta_min).collect();
    let fit = fit_threshold(&pts)?;
    let json = to_json(&fit);
    Ok(CommandOutput {
        files: vec![("fit.json".into(), json.clone())],
        summary: json,
    })
}

#[derive(Debug, Serialize)]
struct CycleSummary {
    params: ModelParams,
    initial: State,
    cycle: CycleReport,
}

pub fn cmd_cycle(cfg: &RunConfig) -> Result<CommandOutput> {
    let p = cfg.model()?;
    let s0 = cfg.initial()?;
    let traj = integrate_forced(s0, &p, &cfg.integration()?)?;
    let report = detect_cycle(&traj, &p);
    let json = to_json(&CycleSummary {
        params: p,
        initial: s0,
        cycle: report,
    });
    Ok(CommandOutput {
        files: vec![("trajectory.csv".into(), traj.to_csv()), ("cycle.json".into(), json.clone())],
        summary: json,
    })
}

/// Dispatch a parsed command line.
pub fn run(cli: &Cli) -> Result<(CommandOutput, Option<PathBuf>)> {
    let cfg = RunConfig::resolve(cli.command.common())?;
    let out = match &cli.command {
        Command::Simulate { extended, off_at, .. } => cmd_simulate(&cfg, *extended, *off_at)?,
        Command::Stability { extended, .. } => cmd_stability(&cfg, *extended)?,
        Command::Potential {
            x_min, x_max, points, ..
        } => cmd_potential(&cfg, *x_min, *x_max, *points)?,
        Command::Sweep {
            v_min,
            v_max,
            v_n,
            beta_min,
            beta_max,
            beta_n,
            fit_beta_min,
            ..
        } => {
            let spec = sweep_spec(&cfg, [*v_min, *v_max], *v_n, [*beta_min, *beta_max], *beta_n)?;
            cmd_sweep(&cfg, &spec, *fit_beta_min)?
        }
        Command::Fit {
            input,
            synthetic,
            fit_beta_min,
            ..
        } => cmd_fit(input.as_deref(), *synthetic, *fit_beta_min)?,
        Command::Cycle { .. } => cmd_cycle(&cfg)?,
    };
    Ok((out, cfg.output.dir.clone()))
}

/// Process exit code for an error: 2 for invalid input, 3 for numerical failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::IntegrationFailure { .. } | Error::FitFailure { .. } => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}
