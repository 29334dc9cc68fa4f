//! Adaptive Dormand-Prince 5(4) integration of the forced and autonomous systems.
//!
//! Steps are controlled by a proportional-integral controller on the embedded
//! fourth-order error estimate. Output is sampled on the uniform grid
//! `τ = n·sample_dt` through the continuous extension of the method, plus the
//! terminal point. Events (including the blow-up guard on `x`) are located by
//! bisection of the continuous extension to `sample_dt / 10`.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Error, Result};
use crate::model::{rhs_autonomous, rhs_forced, ExtendedState, ModelParams, State};

/// Step-control safety factor.
const SAFETY: f64 = 0.9;
/// Bounds on the step ratio `h_new / h`.
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
/// Integral gain of the PI controller.
const PI_BETA: f64 = 0.04;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrationConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Blow-up guard: integration stops once `x` exceeds this value.
    pub escape_x: f64,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_step: 1.0,
            t_end: 200.0,
            sample_dt: 0.01,
            escape_x: 1e3,
        }
    }
}

impl IntegrationConfig {
    pub fn with_t_end(self, t_end: f64) -> Self {
        Self { t_end, ..self }
    }

    pub fn with_tolerances(self, rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..self
        }
    }

    pub fn with_sample_dt(self, sample_dt: f64) -> Self {
        Self { sample_dt, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("rel_tol", self.rel_tol)?;
        check_positive("abs_tol", self.abs_tol)?;
        check_positive("max_step", self.max_step)?;
        check_positive("t_end", self.t_end)?;
        check_positive("sample_dt", self.sample_dt)?;
        check_positive("escape_x", self.escape_x)
    }

    /// Sample time of grid index `n`, snapped onto `t_end` when within rounding.
    fn grid_time(&self, n: u64, t_end: f64) -> f64 {
        let t = n as f64 * self.sample_dt;
        if (t - t_end).abs() <= 1e-9 * self.sample_dt {
            t_end
        } else {
            t
        }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    Escaped { tau: f64 },
    Event { tau: f64, label: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample<S> {
    pub tau: f64,
    pub state: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<Sample<S>>,
    pub termination: Termination,
    pub stats: IntegrationStats,
    /// Largest `|u² + (z/β)² - 1|` over accepted steps (autonomous runs with `β > 0`).
    pub oscillator_drift: Option<f64>,
}

/// Access to the two populations, shared by [`State`] and [`ExtendedState`].
pub trait Populations: Copy {
    fn x(&self) -> f64;
    fn y(&self) -> f64;
}

impl Populations for State {
    fn x(&self) -> f64 {
        self.x
    }
    fn y(&self) -> f64 {
        self.y
    }
}

impl Populations for ExtendedState {
    fn x(&self) -> f64 {
        self.x
    }
    fn y(&self) -> f64 {
        self.y
    }
}

/// One CSV row per sample.
pub trait CsvRecord {
    const HEADER: &'static str;
    fn fields(&self) -> Vec<f64>;
}

impl CsvRecord for State {
    const HEADER: &'static str = "tau,x,y";
    fn fields(&self) -> Vec<f64> {
        vec![self.x, self.y]
    }
}

impl CsvRecord for ExtendedState {
    const HEADER: &'static str = "tau,x,y,u,z";
    fn fields(&self) -> Vec<f64> {
        vec![self.x, self.y, self.u, self.z]
    }
}

/// Fixed-width scientific notation with 15 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.14e}")
}

impl<S> Trajectory<S> {
    pub fn first(&self) -> &Sample<S> {
        &self.samples[0]
    }

    pub fn last(&self) -> &Sample<S> {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_tau(&self) -> f64 {
        self.last().tau
    }

    pub fn escaped(&self) -> Option<f64> {
        match self.termination {
            Termination::Escaped { tau } => Some(tau),
            _ => None,
        }
    }

    pub fn taus(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.tau)
    }
}

impl<S: Populations> Trajectory<S> {
    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.x())
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.state.y())
    }

    /// First sampled time at which `x` drops strictly below `level`.
    pub fn first_time_x_below(&self, level: f64) -> Option<f64> {
        self.samples
            .iter()
            .find(|s| s.state.x() < level)
            .map(|s| s.tau)
    }
}

impl<S: CsvRecord> Trajectory<S> {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 64);
        out.push_str(S::HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format_number(s.tau));
            for v in s.state.fields() {
                out.push(',');
                out.push_str(&format_number(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

type EventFn<S> = dyn Fn(f64, &S) -> f64 + Send + Sync;

/// Terminal event: fires when `g(τ, s)` crosses from negative to non-negative.
pub struct Event<S> {
    pub label: String,
    g: Box<EventFn<S>>,
}

impl<S> Event<S> {
    pub fn new(label: impl Into<String>, g: impl Fn(f64, &S) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            g: Box::new(g),
        }
    }
}

impl Event<State> {
    /// Lymphocytes reach zero.
    pub fn immune_collapse() -> Self {
        Event::new("immune_collapse", |_, s: &State| -s.y)
    }
}

impl<S> std::fmt::Debug for Event<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Event").field("label", &self.label).finish()
    }
}

/// Integrate the periodically forced two-dimensional system.
pub fn integrate_forced(s0: State, p: &ModelParams, cfg: &IntegrationConfig) -> Result<Trajectory<State>> {
    integrate_forced_with_events(s0, p, cfg, &[])
}

/// As [`integrate_forced`], stopping at the first terminal event.
pub fn integrate_forced_with_events(
    s0: State,
    p: &ModelParams,
    cfg: &IntegrationConfig,
    events: &[Event<State>],
) -> Result<Trajectory<State>> {
    check_start(s0.x, p, cfg)?;
    let p = *p;
    let seg = solve(
        |t, v: &[f64; 2]| rhs_forced(State::from(*v), &p, t).into(),
        0.0,
        s0.into(),
        cfg.t_end,
        cfg,
        events,
        |_, _| {},
    )?;
    Ok(seg.into_trajectory(None))
}

/// Integrate the autonomous four-dimensional lift.
pub fn integrate_autonomous(
    s0: ExtendedState,
    p: &ModelParams,
    cfg: &IntegrationConfig,
) -> Result<Trajectory<ExtendedState>> {
    check_start(s0.x, p, cfg)?;
    let p = *p;
    let beta = p.beta;
    let mut drift: f64 = if beta > 0.0 {
        (s0.oscillator_energy(beta) - 1.0).abs()
    } else {
        0.0
    };
    let seg = solve(
        |_, v: &[f64; 4]| rhs_autonomous(ExtendedState::from(*v), &p).into(),
        0.0,
        s0.into(),
        cfg.t_end,
        cfg,
        &[] as &[Event<ExtendedState>],
        |_, v: &[f64; 4]| {
            if beta > 0.0 {
                let e = ExtendedState::from(*v).oscillator_energy(beta);
                drift = drift.max((e - 1.0).abs());
            }
        },
    )?;
    Ok(seg.into_trajectory((beta > 0.0).then_some(drift)))
}

/// Treatment for `τ < off_at`, then the untreated system on the same trajectory.
pub fn integrate_schedule(
    s0: State,
    p: &ModelParams,
    cfg: &IntegrationConfig,
    off_at: f64,
) -> Result<Trajectory<State>> {
    check_start(s0.x, p, cfg)?;
    if !(off_at > 0.0 && off_at < cfg.t_end) {
        return Err(Error::InvalidParameter {
            name: "off_at",
            reason: format!("must lie in (0, {}), got {off_at}", cfg.t_end),
        });
    }
    let treated = *p;
    let first = solve(
        |t, v: &[f64; 2]| rhs_forced(State::from(*v), &treated, t).into(),
        0.0,
        s0.into(),
        off_at,
        cfg,
        &[] as &[Event<State>],
        |_, _| {},
    )?;
    if first.termination != Termination::Completed {
        return Ok(first.into_trajectory(None));
    }
    let untreated = p.untreated();
    let (t_off, y_off) = *first.samples.last().expect("segment is non-empty");
    let second = solve(
        |t, v: &[f64; 2]| rhs_forced(State::from(*v), &untreated, t).into(),
        t_off,
        y_off,
        cfg.t_end,
        cfg,
        &[] as &[Event<State>],
        |_, _| {},
    )?;
    let mut joined = first;
    joined.samples.extend(second.samples.into_iter().skip(1));
    joined.termination = second.termination;
    joined.stats.accepted_steps += second.stats.accepted_steps;
    joined.stats.rejected_steps += second.stats.rejected_steps;
    joined.stats.rhs_evaluations += second.stats.rhs_evaluations;
    Ok(joined.into_trajectory(None))
}

fn check_start(x0: f64, p: &ModelParams, cfg: &IntegrationConfig) -> Result<()> {
    cfg.validate()?;
    p.validate()?;
    if !(x0.is_finite() && x0 >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: format!("initial tumor population must be >= 0, got {x0}"),
        });
    }
    Ok(())
}

struct Segment<const N: usize> {
    samples: Vec<(f64, [f64; N])>,
    termination: Termination,
    stats: IntegrationStats,
}

impl<const N: usize> Segment<N> {
    fn into_trajectory<S: From<[f64; N]>>(self, oscillator_drift: Option<f64>) -> Trajectory<S> {
        Trajectory {
            samples: self
                .samples
                .into_iter()
                .map(|(tau, v)| Sample {
                    tau,
                    state: S::from(v),
                })
                .collect(),
            termination: self.termination,
            stats: self.stats,
            oscillator_drift,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Fifth minus fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension over one accepted step.
struct Dense<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Dense<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.r;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])))
        })
    }
}

#[inline]
fn lincomb<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], cfg: &IntegrationConfig) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs().max(y1[i].abs());
            (err[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    cfg: &IntegrationConfig,
    span: f64,
) -> f64 {
    let scale = |i: usize| cfg.abs_tol + cfg.rel_tol * y0[i].abs();
    let rms = |v: &[f64; N]| ((0..N).map(|i| (v[i] / scale(i)).powi(2)).sum::<f64>() / N as f64).sqrt();
    let dnf = rms(f0);
    let dny = rms(y0);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * dny / dnf
    };
    h = h.min(cfg.max_step).min(span);
    let y1: [f64; N] = std::array::from_fn(|i| y0[i] + h * f0[i]);
    let f1 = f(t0 + h, &y1);
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let der2 = rms(&diff) / h;
    let der12 = dnf.max(der2);
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(cfg.max_step).min(span)
}

/// Core adaptive loop from `(t_start, y0)` to `t_end`.
///
/// Samples are emitted at grid times `n·sample_dt` in `(t_start, t_end]`,
/// preceded by the start point and followed by the terminal point when it is off-grid.
fn solve<const N: usize, S: From<[f64; N]>>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t_start: f64,
    y_start: [f64; N],
    t_end: f64,
    cfg: &IntegrationConfig,
    events: &[Event<S>],
    mut on_step: impl FnMut(f64, &[f64; N]),
) -> Result<Segment<N>> {
    let mut stats = IntegrationStats::default();
    let mut samples = Vec::with_capacity(((t_end - t_start) / cfg.sample_dt) as usize + 2);
    samples.push((t_start, y_start));

    let g = |ev: &Event<S>, t: f64, y: &[f64; N]| (ev.g)(t, &S::from(*y));
    // Conditions already met at the start never fire.
    let armed: Vec<bool> = events.iter().map(|ev| g(ev, t_start, &y_start) < 0.0).collect();
    let escape = |y: &[f64; N]| y[0] - cfg.escape_x;
    let escape_armed = escape(&y_start) < 0.0;

    let mut next_n = (t_start / cfg.sample_dt).floor() as u64 + 1;
    while cfg.grid_time(next_n, t_end) <= t_start {
        next_n += 1;
    }

    let mut t = t_start;
    let mut y = y_start;
    let mut k1 = f(t, &y);
    stats.rhs_evaluations += 1;
    let span = t_end - t_start;
    let mut h = initial_step(&f, t, &y, &k1, cfg, span);
    stats.rhs_evaluations += 1;
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if stats.accepted_steps + stats.rejected_steps >= MAX_STEPS {
            return Err(failure(t, &y, "step budget exhausted"));
        }
        if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(failure(t, &y, "step size underflow"));
        }
        h = h.min(cfg.max_step);
        let last_step = t + 1.01 * h >= t_end;
        if last_step {
            h = t_end - t;
        }

        let k2 = f(t + C2 * h, &lincomb(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &lincomb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &lincomb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(
            t + C5 * h,
            &lincomb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let y6 = lincomb(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let t_new = if last_step { t_end } else { t + h };
        let k6 = f(t_new, &y6);
        let y_new = lincomb(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new);
        stats.rhs_evaluations += 6;

        let est: [f64; N] =
            std::array::from_fn(|i| h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let err = error_norm(&est, &y, &y_new, cfg);

        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            stats.rejected_steps += 1;
            last_rejected = true;
            h *= MIN_SCALE;
            continue;
        }

        let fac11 = err.powf(0.2 - 0.75 * PI_BETA);
        if err > 1.0 {
            stats.rejected_steps += 1;
            last_rejected = true;
            h /= (1.0 / MIN_SCALE).min(fac11 / SAFETY);
            continue;
        }

        stats.accepted_steps += 1;
        let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
        let bspl: [f64; N] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
        let dense = Dense {
            t0: t,
            h,
            r: [
                y,
                ydiff,
                bspl,
                std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                std::array::from_fn(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                }),
            ],
        };

        // Earliest terminal crossing inside this step.
        let mut stop: Option<(f64, Termination)> = None;
        let resolution = cfg.sample_dt / 10.0;
        if escape_armed && escape(&y_new) >= 0.0 {
            let tau = bisect(&dense, t, t_new, resolution, |_, v| escape(v));
            stop = Some((tau, Termination::Escaped { tau }));
        }
        for (ev, _) in events.iter().zip(&armed).filter(|(_, a)| **a) {
            if g(ev, t_new, &y_new) >= 0.0 {
                let tau = bisect(&dense, t, t_new, resolution, |tt, v| g(ev, tt, v));
                if stop.as_ref().is_none_or(|(ts, _)| tau < *ts) {
                    stop = Some((
                        tau,
                        Termination::Event {
                            tau,
                            label: ev.label.clone(),
                        },
                    ));
                }
            }
        }

        let horizon = stop.as_ref().map_or(t_new, |(ts, _)| *ts);
        loop {
            let ts = cfg.grid_time(next_n, t_end);
            if ts > horizon {
                break;
            }
            let v = if ts == t_new { y_new } else { dense.eval(ts) };
            samples.push((ts, v));
            next_n += 1;
        }

        if let Some((tau, termination)) = stop {
            if samples.last().is_some_and(|(ts, _)| *ts < tau) {
                samples.push((tau, dense.eval(tau)));
            }
            return Ok(Segment {
                samples,
                termination,
                stats,
            });
        }

        on_step(t_new, &y_new);

        // PI step-size update.
        let mut fac = fac11 / err_old.powf(PI_BETA);
        fac = (1.0 / MAX_SCALE).max((1.0 / MIN_SCALE).min(fac / SAFETY));
        let mut h_new = h / fac;
        if last_rejected {
            h_new = h_new.min(h);
        }
        err_old = err.max(1e-4);
        last_rejected = false;

        t = t_new;
        y = y_new;
        k1 = k7;
        h = h_new;
    }

    if samples.last().is_some_and(|(ts, _)| *ts < t_end) {
        samples.push((t_end, y));
    }
    Ok(Segment {
        samples,
        termination: Termination::Completed,
        stats,
    })
}

/// Smallest bracketed time where `g` becomes non-negative, to within `resolution`.
fn bisect<const N: usize>(
    dense: &Dense<N>,
    mut lo: f64,
    mut hi: f64,
    resolution: f64,
    g: impl Fn(f64, &[f64; N]) -> f64,
) -> f64 {
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if g(mid, &dense.eval(mid)) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn failure<const N: usize>(t: f64, y: &[f64; N], reason: &str) -> Error {
    Error::IntegrationFailure {
        tau: t,
        state: y.to_vec(),
        reason: reason.to_owned(),
    }
}

/// Render a trajectory summary line, mostly for examples and logs.
pub fn describe<S: Populations>(traj: &Trajectory<S>) -> String {
    let (x_min, x_max) = traj
        .xs()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    format!(
        "{} samples to tau = {:.3}, x in [{x_min:.4e}, {x_max:.4e}], {:?}",
        traj.samples.len(),
        traj.final_tau(),
        traj.termination
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lv_invariant(p: &ModelParams, s: &State) -> f64 {
        s.x - s.y.ln() * p.alpha - s.x.ln() / p.alpha + s.y
    }

    #[test]
    fn invariant_axis_decays_exponentially() {
        let p = ModelParams::new(2.0, 0.2, 0.0);
        let cfg = IntegrationConfig::default().with_t_end(20.0);
        let traj = integrate_forced(State::new(0.0, 3.0), &p, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        for s in &traj.samples {
            assert_eq!(s.state.x, 0.0);
            let exact = 3.0 * (-s.tau / p.alpha).exp();
            assert!((s.state.y - exact).abs() < 1e-7 * exact, "tau {} y {} exact {exact}", s.tau, s.state.y);
        }
    }

    #[test]
    fn sampling_grid_is_uniform_and_starts_at_initial_condition() {
        let p = ModelParams::new(2.0, 0.2, 0.25);
        let cfg = IntegrationConfig::default().with_t_end(10.005).with_sample_dt(0.01);
        let s0 = State::new(5.3, 6.7);
        let traj = integrate_forced(s0, &p, &cfg).unwrap();
        assert_eq!(traj.first().tau, 0.0);
        assert_eq!(traj.first().state, s0);
        assert_eq!(traj.samples.len(), 1002);
        assert_eq!(traj.final_tau(), 10.005);
        for (n, w) in traj.samples.windows(2).enumerate() {
            assert!(w[1].tau > w[0].tau);
            if n < 1000 {
                assert_eq!(w[1].tau, (n + 1) as f64 * 0.01);
            }
        }
    }

    #[test]
    fn terminal_point_not_duplicated_on_grid() {
        let p = ModelParams::new(2.0, 0.2, 0.25);
        let cfg = IntegrationConfig::default().with_t_end(1.0).with_sample_dt(0.1);
        let traj = integrate_forced(State::new(1.0, 1.0), &p, &cfg).unwrap();
        assert_eq!(traj.samples.len(), 11);
        assert_eq!(traj.final_tau(), 1.0);
    }

    #[test]
    fn lotka_volterra_invariant_is_conserved() {
        let p = ModelParams::new(1.0, 0.0, 0.0);
        let cfg = IntegrationConfig::default().with_t_end(100.0);
        let traj = integrate_forced(State::new(1.5, 1.5), &p, &cfg).unwrap();
        let c0 = lv_invariant(&p, &traj.first().state);
        let drift = traj
            .samples
            .iter()
            .map(|s| (lv_invariant(&p, &s.state) - c0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-6, "drift {drift}");
    }

    #[test]
    fn tighter_tolerance_does_not_worsen_drift() {
        let p = ModelParams::new(1.0, 0.0, 0.0);
        let drift = |rtol: f64| {
            let cfg = IntegrationConfig::default().with_t_end(100.0).with_tolerances(rtol, 1e-12);
            let traj = integrate_forced(State::new(1.5, 1.5), &p, &cfg).unwrap();
            let c0 = lv_invariant(&p, &traj.first().state);
            traj.samples
                .iter()
                .map(|s| (lv_invariant(&p, &s.state) - c0).abs())
                .fold(0.0, f64::max)
        };
        let mut prev = drift(1e-6);
        for rtol in [5e-7, 2.5e-7, 1.25e-7] {
            let d = drift(rtol);
            assert!(d <= prev, "rtol {rtol}: {d} > {prev}");
            prev = d;
        }
    }

    #[test]
    fn dormant_parameters_damp_toward_coexistence() {
        let p = ModelParams::new(2.0, 0.2, 0.25);
        let traj = integrate_forced(State::new(5.3, 6.7), &p, &IntegrationConfig::default()).unwrap();
        assert_eq!(traj.termination, Termination::Completed);
        let tail: Vec<f64> = traj.samples.iter().filter(|s| s.tau > 190.0).map(|s| s.state.x).collect();
        for x in tail {
            assert!((x - 0.416_666_666_666_666_7).abs() < 0.02, "x = {x}");
        }
    }

    #[test]
    fn recurrence_parameters_escape() {
        let p = ModelParams::new(2.0, 0.2, 0.05);
        let cfg = IntegrationConfig::default();
        let traj = integrate_forced(State::new(2.1, 2.7), &p, &cfg).unwrap();
        let tau = traj.escaped().expect("escapes");
        assert!(tau < cfg.t_end);
        assert_eq!(traj.final_tau(), tau);
        let x_end = traj.last().state.x;
        assert!(x_end >= cfg.escape_x && x_end < cfg.escape_x * 1.1, "{x_end}");
        // state just before the located crossing is still under the guard
        let before = traj.samples[traj.samples.len() - 2].state.x;
        assert!(before < cfg.escape_x);
    }

    #[test]
    fn event_stops_integration() {
        let p = ModelParams::new(2.0, 0.2, 0.05);
        let traj = integrate_forced_with_events(
            State::new(2.1, 2.7),
            &p,
            &IntegrationConfig::default(),
            &[Event::immune_collapse()],
        )
        .unwrap();
        match &traj.termination {
            Termination::Event { tau, label } => {
                assert_eq!(label, "immune_collapse");
                assert_eq!(*tau, traj.final_tau());
                assert!(traj.last().state.y <= 0.0);
                assert!(traj.last().state.y > -1e-2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oscillator_closed_form() {
        let p = ModelParams::new(2.0, 0.2, 0.25).with_treatment(0.0, 1.3);
        let cfg = IntegrationConfig::default().with_t_end(30.0);
        let traj = integrate_autonomous(State::new(0.4, 2.0).extend(), &p, &cfg).unwrap();
        for s in &traj.samples {
            assert!((s.state.u - (1.3 * s.tau).cos()).abs() < 1e-7);
            assert!((s.state.z + 1.3 * (1.3 * s.tau).sin()).abs() < 1e-7);
        }
        assert!(traj.oscillator_drift.unwrap() < 1e-8);
    }

    #[test]
    fn constant_dose_keeps_oscillator_fixed() {
        let p = ModelParams::new(2.0, 0.2, 0.25).with_treatment(0.3, 0.0);
        let cfg = IntegrationConfig::default().with_t_end(20.0);
        let traj = integrate_autonomous(State::new(0.4, 2.0).extend(), &p, &cfg).unwrap();
        assert!(traj.samples.iter().all(|s| s.state.u == 1.0 && s.state.z == 0.0));
        assert_eq!(traj.oscillator_drift, None);
    }

    #[test]
    fn autonomous_lift_tracks_forced_system() {
        let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.25, 0.8);
        let cfg = IntegrationConfig::default().with_t_end(50.0);
        let s0 = State::new(5.3, 6.7);
        let a = integrate_forced(s0, &p, &cfg).unwrap();
        let b = integrate_autonomous(s0.extend(), &p, &cfg).unwrap();
        assert_eq!(a.samples.len(), b.samples.len());
        for (sa, sb) in a.samples.iter().zip(&b.samples) {
            assert_eq!(sa.tau, sb.tau);
            assert!((sa.state.x - sb.state.x).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic() {
        let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.3, 1.7);
        let cfg = IntegrationConfig::default().with_t_end(60.0);
        let a = integrate_forced(State::new(5.3, 6.7), &p, &cfg).unwrap();
        let b = integrate_forced(State::new(5.3, 6.7), &p, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dense_output_matches_tight_reference() {
        let p = ModelParams::new(2.0, 0.2, 0.25).with_treatment(0.2, 1.1);
        let coarse = IntegrationConfig::default()
            .with_t_end(40.0)
            .with_tolerances(1e-7, 1e-10)
            .with_sample_dt(0.013);
        let fine = coarse.with_tolerances(1e-12, 1e-14);
        let a = integrate_forced(State::new(3.0, 1.0), &p, &coarse).unwrap();
        let b = integrate_forced(State::new(3.0, 1.0), &p, &fine).unwrap();
        let worst = a
            .samples
            .iter()
            .zip(&b.samples)
            .map(|(u, v)| (u.state.x - v.state.x).abs().max((u.state.y - v.state.y).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-5, "{worst}");
    }

    #[test]
    fn schedule_without_dose_matches_plain_run() {
        let p = ModelParams::new(2.0, 0.2, 0.25);
        let cfg = IntegrationConfig::default().with_t_end(40.0);
        let plain = integrate_forced(State::new(5.3, 6.7), &p, &cfg).unwrap();
        let sched = integrate_schedule(State::new(5.3, 6.7), &p, &cfg, 17.0).unwrap();
        assert_eq!(sched.samples.len(), plain.samples.len());
        for (a, b) in plain.samples.iter().zip(sched.samples.iter()) {
            assert_eq!(a.tau, b.tau);
            assert!((a.state.x - b.state.x).abs() < 1e-7);
        }
    }

    #[test]
    fn late_interruption_is_a_no_op() {
        let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.3, 1.5);
        let cfg = IntegrationConfig::default().with_t_end(60.0);
        let plain = integrate_forced(State::new(5.3, 6.7), &p, &cfg).unwrap();
        let sched = integrate_schedule(State::new(5.3, 6.7), &p, &cfg, 60.0 - 1e-3).unwrap();
        for (a, b) in plain.samples.iter().zip(&sched.samples).filter(|(a, _)| a.tau < 59.99) {
            assert_eq!(a.tau, b.tau);
            assert!((a.state.x - b.state.x).abs() < 1e-7, "tau {}", a.tau);
        }
    }

    #[test]
    fn schedule_rejects_bad_interruption() {
        let p = ModelParams::new(2.0, 0.2, 0.05);
        let cfg = IntegrationConfig::default().with_t_end(10.0);
        for off in [0.0, -1.0, 10.0, 12.0] {
            assert!(integrate_schedule(State::new(1.0, 1.0), &p, &cfg, off).is_err());
        }
    }

    #[test]
    fn invalid_inputs_rejected() {
        let p = ModelParams::new(2.0, 0.2, 0.05);
        let cfg = IntegrationConfig::default();
        assert!(integrate_forced(State::new(-1.0, 1.0), &p, &cfg).is_err());
        let bad = IntegrationConfig {
            sample_dt: 0.0,
            ..cfg
        };
        assert!(integrate_forced(State::new(1.0, 1.0), &p, &bad).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::new(2.0, 0.2, 0.25);
        let cfg = IntegrationConfig::default().with_t_end(0.05);
        let csv = integrate_forced(State::new(0.0, 1.0), &p, &cfg).unwrap().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("tau,x,y"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(row, vec![0.0, 0.0, 1.0]);
        assert_eq!(csv.lines().count(), 7);
        let csv = integrate_autonomous(State::new(0.0, 1.0).extend(), &p.with_treatment(0.1, 1.0), &cfg)
            .unwrap()
            .to_csv();
        assert!(csv.starts_with("tau,x,y,u,z\n"));
        // 15 significant digits
        assert_eq!(format_number(1.0 / 3.0), "3.33333333333333e-1");
        assert_relative_eq!(format_number(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
