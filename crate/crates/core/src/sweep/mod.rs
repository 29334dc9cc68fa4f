//! `(V, β)` phase diagrams of treated growth.
//!
//! Every grid cell integrates the forced system from the same initial state
//! and records a [`GrowthVerdict`]. Cells are independent and are evaluated
//! on a rayon pool; results land in slots keyed by cell index, so the grid
//! does not depend on scheduling.

mod fit;
mod simplex;

pub use fit::{fit_threshold, fit_threshold_with, FitOptions, ThresholdFit, REFERENCE_CURVE};
pub use simplex::{nelder_mead, SimplexOptions, SimplexResult};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{classify_growth, Growth, GrowthCriteria, GrowthVerdict};
use crate::error::{Error, Result};
use crate::integrator::{format_number, integrate_forced, IntegrationConfig};
use crate::model::{ModelParams, State};

/// Evenly spaced axis `min..=max` with `n` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisRange {
    pub const fn new(min: f64, max: f64, n: usize) -> Self {
        Self { min, max, n }
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.max - self.min) / (self.n - 1) as f64;
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.max } else { self.min + step * i as f64 })
            .collect()
    }

    fn validate(&self, name: &'static str) -> Result<()> {
        if self.n < 2 || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("need n >= 2 and min < max, got {self:?}"),
            });
        }
        if self.min < 0.0 {
            return Err(Error::InvalidParameter {
                name,
                reason: "axis must be non-negative".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Model parameters; `V` and `β` are overridden per cell.
    pub base: ModelParams,
    /// Initial condition shared by every cell.
    pub s0: State,
    pub v_range: AxisRange,
    pub beta_range: AxisRange,
    pub integration: IntegrationConfig,
    pub growth: GrowthCriteria,
}

impl SweepSpec {
    /// Default 60×60 lattice over `V ∈ [0, 0.6]`, `β ∈ [0, 3]`.
    pub fn new(base: ModelParams, s0: State) -> Self {
        Self {
            base,
            s0,
            v_range: AxisRange::new(0.0, 0.6, 60),
            beta_range: AxisRange::new(0.0, 3.0, 60),
            integration: IntegrationConfig::default(),
            growth: GrowthCriteria::default(),
        }
    }

    pub fn with_axes(self, v_range: AxisRange, beta_range: AxisRange) -> Self {
        Self {
            v_range,
            beta_range,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        self.integration.validate()?;
        self.v_range.validate("v_range")?;
        self.beta_range.validate("beta_range")?;
        if self.integration.t_end < self.growth.min_horizon {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!(
                    "sweep horizon {} is shorter than the growth criterion horizon {}",
                    self.integration.t_end, self.growth.min_horizon
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Classified(GrowthVerdict),
    Failed { reason: String },
}

impl CellOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            CellOutcome::Classified(v) => v.outcome.as_str(),
            CellOutcome::Failed { .. } => "failed",
        }
    }

    pub fn is_controllable(&self) -> bool {
        matches!(self, CellOutcome::Classified(v) if v.outcome == Growth::Controllable)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub v_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    /// Row-major: index `i_v * beta_axis.len() + j_beta`.
    pub cells: Vec<CellOutcome>,
}

impl SweepGrid {
    pub fn cell(&self, i_v: usize, j_beta: usize) -> &CellOutcome {
        &self.cells[i_v * self.beta_axis.len() + j_beta]
    }

    pub fn count(&self, pred: impl Fn(&CellOutcome) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(c)).count()
    }

    /// `V,beta,outcome` rows, `V` outer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("V,beta,outcome\n");
        for (i, v) in self.v_axis.iter().enumerate() {
            for (j, b) in self.beta_axis.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{}\n",
                    format_number(*v),
                    format_number(*b),
                    self.cell(i, j).label()
                ));
            }
        }
        out
    }
}

/// Integrate and classify one cell.
pub fn evaluate_cell(spec: &SweepSpec, v: f64, beta: f64) -> CellOutcome {
    let p = spec.base.with_treatment(v, beta);
    integrate_forced(spec.s0, &p, &spec.integration)
        .and_then(|traj| classify_growth(&traj, &spec.growth))
        .map_or_else(|e| CellOutcome::Failed { reason: e.to_string() }, CellOutcome::Classified)
}

/// Evaluate every cell on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepGrid> {
    spec.validate()?;
    let v_axis = spec.v_range.values();
    let beta_axis = spec.beta_range.values();
    let nb = beta_axis.len();
    let cells = (0..v_axis.len() * nb)
        .into_par_iter()
        .map(|idx| evaluate_cell(spec, v_axis[idx / nb], beta_axis[idx % nb]))
        .collect();
    Ok(SweepGrid {
        v_axis,
        beta_axis,
        cells,
    })
}

/// [`run_sweep`] on a dedicated pool of `jobs` workers (`None`: available parallelism).
pub fn run_sweep_with_jobs(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepGrid> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| run_sweep(spec))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub beta: f64,
    pub v_threshold: f64,
    /// Column is uncontrollable strictly below the threshold and controllable above it.
    pub monotone: bool,
}

/// Controllability threshold of every `β` column that has both verdicts.
///
/// The threshold sits halfway between the highest uncontrollable `V` and the
/// lowest `V` from which the rest of the column is controllable. Columns that
/// end uncontrollable, or hold controllable cells beneath the threshold, are
/// flagged non-monotone; the former report their first upward transition.
pub fn extract_boundary(grid: &SweepGrid) -> Vec<BoundaryPoint> {
    let nv = grid.v_axis.len();
    let mut out = Vec::new();
    for (j, &beta) in grid.beta_axis.iter().enumerate() {
        let col: Vec<bool> = (0..nv).map(|i| grid.cell(i, j).is_controllable()).collect();
        if col.iter().all(|&c| c) || col.iter().all(|&c| !c) {
            continue;
        }
        let stable_from = (0..nv).rev().take_while(|&i| col[i]).last();
        let point = match stable_from {
            Some(i) if i > 0 => Some((i, col[..i].iter().all(|&c| !c))),
            _ => (1..nv).find(|&i| !col[i - 1] && col[i]).map(|i| (i, false)),
        };
        if let Some((i, monotone)) = point {
            out.push(BoundaryPoint {
                beta,
                v_threshold: 0.5 * (grid.v_axis[i - 1] + grid.v_axis[i]),
                monotone,
            });
        }
    }
    out
}

pub fn boundary_csv(points: &[BoundaryPoint]) -> String {
    let mut out = String::from("beta,V_threshold,monotone\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{}\n",
            format_number(p.beta),
            format_number(p.v_threshold),
            p.monotone
        ));
    }
    out
}

/// Parse a boundary CSV produced by [`boundary_csv`].
pub fn parse_boundary_csv(text: &str) -> Result<Vec<BoundaryPoint>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(h) if h.trim() == "beta,V_threshold,monotone" => {}
        other => return Err(Error::Config(format!("unexpected boundary header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::Config(format!("malformed boundary row {}: {line}", n + 2));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(BoundaryPoint {
                beta: f[0].parse().map_err(|_| bad())?,
                v_threshold: f[1].parse().map_err(|_| bad())?,
                monotone: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdict(outcome: Growth) -> CellOutcome {
        CellOutcome::Classified(GrowthVerdict {
            outcome,
            immune_collapse: false,
            escape_tau: None,
            x_bound: 0.0,
            y_min: 0.0,
            horizon: 200.0,
        })
    }

    fn synthetic_grid(v_axis: Vec<f64>, beta_axis: Vec<f64>, controllable: impl Fn(f64, f64) -> bool) -> SweepGrid {
        let mut cells = Vec::new();
        for &v in &v_axis {
            for &b in &beta_axis {
                cells.push(verdict(if controllable(v, b) {
                    Growth::Controllable
                } else {
                    Growth::Uncontrollable
                }));
            }
        }
        SweepGrid {
            v_axis,
            beta_axis,
            cells,
        }
    }

    #[test]
    fn axis_values_hit_both_ends() {
        let v = AxisRange::new(0.0, 0.6, 60).values();
        assert_eq!(v.len(), 60);
        assert_eq!(v[0], 0.0);
        assert_eq!(v[59], 0.6);
        assert!(AxisRange::new(0.0, 1.0, 1).validate("x").is_err());
        assert!(AxisRange::new(1.0, 1.0, 5).validate("x").is_err());
    }

    #[test]
    fn reference_curve_boundary_within_one_cell() {
        let curve = |b: f64| REFERENCE_CURVE.eval(b);
        let grid = synthetic_grid(
            AxisRange::new(0.0, 0.6, 60).values(),
            AxisRange::new(0.1, 3.0, 40).values(),
            |v, b| v > curve(b),
        );
        let dv = grid.v_axis[1] - grid.v_axis[0];
        let boundary = extract_boundary(&grid);
        assert!(!boundary.is_empty());
        for p in &boundary {
            assert!(p.monotone);
            assert!((p.v_threshold - curve(p.beta)).abs() <= dv, "{p:?}");
        }
    }

    #[test]
    fn uniform_grids_have_no_boundary() {
        let grid = synthetic_grid(vec![0.0, 0.5, 1.0], vec![0.0, 1.0], |_, _| true);
        assert!(extract_boundary(&grid).is_empty());
        let grid = synthetic_grid(vec![0.0, 0.5, 1.0], vec![0.0, 1.0], |_, _| false);
        assert!(extract_boundary(&grid).is_empty());
    }

    #[test]
    fn two_row_grid_threshold_at_midpoint() {
        let grid = synthetic_grid(vec![0.1, 0.3], vec![1.0], |v, _| v > 0.2);
        let b = extract_boundary(&grid);
        assert_eq!(b.len(), 1);
        assert!((b[0].v_threshold - 0.2).abs() < 1e-15);
        assert!(b[0].monotone);
    }

    #[test]
    fn non_monotone_columns_are_flagged() {
        // uncontrollable pocket inside the controllable zone
        let v_axis = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        let grid = synthetic_grid(v_axis.clone(), vec![1.0], |v, _| v > 0.05 && !(0.25..=0.35).contains(&v));
        let b = extract_boundary(&grid);
        assert_eq!(b.len(), 1);
        assert!((b[0].v_threshold - 0.35).abs() < 1e-12);
        assert!(!b[0].monotone);

        // uncontrollable again at the top of the column
        let grid = synthetic_grid(v_axis, vec![1.0], |v, _| v > 0.15 && v < 0.45);
        let b = extract_boundary(&grid);
        assert_eq!(b.len(), 1);
        assert!((b[0].v_threshold - 0.15).abs() < 1e-12);
        assert!(!b[0].monotone);
    }

    #[test]
    fn failed_cells_count_as_not_controllable() {
        let mut grid = synthetic_grid(vec![0.0, 0.2, 0.4], vec![0.5], |v, _| v > 0.1);
        grid.cells[0] = CellOutcome::Failed { reason: "x".into() };
        let b = extract_boundary(&grid);
        assert!((b[0].v_threshold - 0.1).abs() < 1e-15);
        assert!(grid.to_csv().contains(",failed\n"));
    }

    #[test]
    fn boundary_csv_round_trip() {
        let pts = vec![
            BoundaryPoint {
                beta: 0.25,
                v_threshold: 0.1234567890123,
                monotone: true,
            },
            BoundaryPoint {
                beta: 1.5,
                v_threshold: 0.1,
                monotone: false,
            },
        ];
        let back = parse_boundary_csv(&boundary_csv(&pts)).unwrap();
        assert_eq!(back.len(), 2);
        assert!((back[0].v_threshold - pts[0].v_threshold).abs() < 1e-14);
        assert!(!back[1].monotone);
        assert!(parse_boundary_csv("beta,V\n1,2\n").is_err());
    }

    #[test]
    fn untreated_recurrence_grid_is_uniformly_uncontrollable() {
        let spec = SweepSpec::new(ModelParams::new(2.0, 0.2, 0.05), State::new(5.3, 6.7))
            .with_axes(AxisRange::new(0.0, 1e-12, 2), AxisRange::new(0.0, 3.0, 2));
        let grid = run_sweep(&spec).unwrap();
        assert_eq!(grid.cells.len(), 4);
        assert!(grid.cells.iter().all(|c| c.label() == "uncontrollable"));
    }

    #[test]
    fn grid_is_independent_of_evaluation_order() {
        let spec = SweepSpec::new(ModelParams::new(2.0, 0.2, 0.05), State::new(5.3, 6.7))
            .with_axes(AxisRange::new(0.0, 0.4, 4), AxisRange::new(0.0, 2.0, 3));
        let grid = run_sweep_with_jobs(&spec, Some(2)).unwrap();
        let mut order: Vec<usize> = (0..12).collect();
        order.reverse();
        order.swap(2, 7);
        let mut slots: Vec<Option<CellOutcome>> = vec![None; 12];
        for idx in order {
            slots[idx] = Some(evaluate_cell(&spec, grid.v_axis[idx / 3], grid.beta_axis[idx % 3]));
        }
        let serial: Vec<CellOutcome> = slots.into_iter().map(Option::unwrap).collect();
        assert_eq!(serial, grid.cells);
    }

    #[test]
    fn spec_validation() {
        let spec = SweepSpec::new(ModelParams::new(2.0, 0.2, 0.05), State::new(5.3, 6.7));
        assert!(spec.validate().is_ok());
        let short = SweepSpec {
            integration: spec.integration.with_t_end(50.0),
            ..spec
        };
        assert!(run_sweep(&short).is_err());
    }
}
