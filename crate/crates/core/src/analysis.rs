//! Trajectory-level verdicts: controllable vs uncontrollable growth, limit
//! cycles of the treated system, and regrowth after treatment stops.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{integrate_forced, integrate_schedule, IntegrationConfig, Populations, Trajectory};
use crate::model::{ModelParams, State};

/// Relative increase a peak must show over its predecessor to count as growth.
const PEAK_GROWTH_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthCriteria {
    /// Shortest non-escaped trajectory that can be judged.
    pub min_horizon: f64,
    /// Fraction of the horizon, counted from the end, whose peak envelope is inspected.
    pub tail_fraction: f64,
}

impl Default for GrowthCriteria {
    fn default() -> Self {
        Self {
            min_horizon: 200.0,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    Controllable,
    Uncontrollable,
}

impl Growth {
    pub fn as_str(&self) -> &'static str {
        match self {
            Growth::Controllable => "controllable",
            Growth::Uncontrollable => "uncontrollable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub outcome: Growth,
    /// Lymphocytes went negative somewhere along the trajectory.
    pub immune_collapse: bool,
    /// Time at which the blow-up guard fired.
    pub escape_tau: Option<f64>,
    /// Largest `x` over the inspected tail.
    pub x_bound: f64,
    pub y_min: f64,
    pub horizon: f64,
}

/// Refined local maximum of a sampled signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub tau: f64,
    pub height: f64,
}

/// Local maxima of `values` (strictly above the left neighbor, not below the
/// right one), each refined by the parabola through the three samples.
pub fn find_peaks(taus: &[f64], values: &[f64]) -> Vec<Peak> {
    let mut out = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        if b > a && b >= c {
            out.push(refine(
                (taus[i - 1], a),
                (taus[i], b),
                (taus[i + 1], c),
            ));
        }
    }
    out
}

fn refine((t0, a): (f64, f64), (t1, b): (f64, f64), (t2, c): (f64, f64)) -> Peak {
    // Parabola in local coordinates s = t - t1.
    let (s0, s2) = (t0 - t1, t2 - t1);
    let d0 = (a - b) / s0;
    let d2 = (c - b) / s2;
    let curv = (d2 - d0) / (s2 - s0);
    let slope = d0 - curv * s0;
    if curv >= 0.0 || !curv.is_finite() {
        return Peak { tau: t1, height: b };
    }
    let s = (-slope / (2.0 * curv)).clamp(s0, s2);
    Peak {
        tau: t1 + s,
        height: b + slope * s + curv * s * s,
    }
}

/// Judge tumor growth along a trajectory.
///
/// Uncontrollable means the blow-up guard fired, or the peak envelope of `x`
/// strictly increases across the inspected tail. A tail without two peaks is
/// uncontrollable only when `x` rises monotonically there without slowing down.
/// `immune_collapse` is set whenever `y` dipped below zero.
pub fn classify_growth<S: Populations>(traj: &Trajectory<S>, criteria: &GrowthCriteria) -> Result<GrowthVerdict> {
    let y_min = traj.ys().fold(f64::INFINITY, f64::min);
    let horizon = traj.final_tau();
    if let Some(tau) = traj.escaped() {
        return Ok(GrowthVerdict {
            outcome: Growth::Uncontrollable,
            immune_collapse: y_min < 0.0,
            escape_tau: Some(tau),
            x_bound: traj.last().state.x(),
            y_min,
            horizon,
        });
    }
    if horizon < criteria.min_horizon {
        return Err(Error::InsufficientData(format!(
            "trajectory ends at tau = {horizon}, need at least {}",
            criteria.min_horizon
        )));
    }
    let start = horizon * (1.0 - criteria.tail_fraction);
    let (taus, xs): (Vec<f64>, Vec<f64>) = traj
        .samples
        .iter()
        .filter(|s| s.tau >= start)
        .map(|s| (s.tau, s.state.x()))
        .unzip();
    let x_bound = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let peaks = find_peaks(&taus, &xs);
    let growing = if peaks.len() >= 2 {
        peaks
            .windows(2)
            .all(|w| w[1].height - w[0].height > PEAK_GROWTH_FLOOR * w[0].height.abs())
    } else {
        monotone_unchecked_growth(&xs)
    };
    Ok(GrowthVerdict {
        outcome: if growing {
            Growth::Uncontrollable
        } else {
            Growth::Controllable
        },
        immune_collapse: y_min < 0.0,
        escape_tau: None,
        x_bound,
        y_min,
        horizon,
    })
}

/// Non-decreasing `x` whose rise over the second half of the window is at
/// least its rise over the first half (no saturation toward a node).
fn monotone_unchecked_growth(xs: &[f64]) -> bool {
    if xs.len() < 3 || xs.windows(2).any(|w| w[1] < w[0]) {
        return false;
    }
    let mid = xs[xs.len() / 2];
    let first = mid - xs[0];
    let second = xs[xs.len() - 1] - mid;
    second > 0.0 && second >= first
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CycleCriteria {
    /// Fraction of the trajectory, counted from the end, that is analyzed.
    pub tail_fraction: f64,
    /// Minimum number of period intervals that must agree.
    pub min_intervals: usize,
    /// Allowed `(max - min)/mean` of the intervals.
    pub max_spread: f64,
    /// Largest number of distinct peaks per period considered.
    pub max_peaks_per_period: usize,
}

impl Default for CycleCriteria {
    fn default() -> Self {
        Self {
            tail_fraction: 1.0 / 3.0,
            min_intervals: 3,
            max_spread: 0.02,
            max_peaks_per_period: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub found: bool,
    pub period: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// `period / (π/β)`; absent for a constant dose.
    pub lock_ratio: Option<f64>,
    /// Distinct maxima of `x` within one period.
    pub peaks_per_period: usize,
}

impl CycleReport {
    fn not_found(x_min: f64, x_max: f64) -> Self {
        Self {
            found: false,
            period: 0.0,
            x_min,
            x_max,
            lock_ratio: None,
            peaks_per_period: 0,
        }
    }
}

pub fn detect_cycle<S: Populations>(traj: &Trajectory<S>, p: &ModelParams) -> CycleReport {
    detect_cycle_with(traj, p, &CycleCriteria::default())
}

/// Periodicity of `x` over the tail of a trajectory.
///
/// A cycle with `m` maxima per period is accepted when, for the smallest such
/// `m`, the spacings `τ[i+m] - τ[i]` between refined peaks agree within
/// `max_spread` and the matching peak heights agree to the same fraction of
/// the oscillation amplitude. Damped oscillations fail the height test.
pub fn detect_cycle_with<S: Populations>(
    traj: &Trajectory<S>,
    p: &ModelParams,
    criteria: &CycleCriteria,
) -> CycleReport {
    let end = traj.final_tau();
    let start = end - (end - traj.first().tau) * criteria.tail_fraction;
    let (taus, xs): (Vec<f64>, Vec<f64>) = traj
        .samples
        .iter()
        .filter(|s| s.tau >= start)
        .map(|s| (s.tau, s.state.x()))
        .unzip();
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if traj.escaped().is_some() || xs.is_empty() {
        return CycleReport::not_found(x_min, x_max);
    }
    let amplitude = x_max - x_min;
    if !(amplitude > 1e-6 * x_max.abs().max(1.0)) {
        return CycleReport::not_found(x_min, x_max);
    }
    let peaks = find_peaks(&taus, &xs);
    for m in 1..=criteria.max_peaks_per_period {
        if peaks.len() < m + criteria.min_intervals {
            break;
        }
        let spans: Vec<f64> = peaks.windows(m + 1).map(|w| w[m].tau - w[0].tau).collect();
        let lo = spans.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = spans.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = spans.iter().sum::<f64>() / spans.len() as f64;
        let heights_match = peaks
            .windows(m + 1)
            .all(|w| (w[m].height - w[0].height).abs() <= criteria.max_spread * amplitude);
        if mean > 0.0 && (hi - lo) / mean < criteria.max_spread && heights_match {
            return CycleReport {
                found: true,
                period: mean,
                x_min: x_min.max(0.0),
                x_max,
                lock_ratio: p.forcing_period().map(|t| mean / t),
                peaks_per_period: m,
            };
        }
    }
    CycleReport::not_found(x_min, x_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegrowthCriteria {
    /// Regrowth means the post-interruption maximum exceeds this multiple of the treated minimum.
    pub factor: f64,
    pub growth: GrowthCriteria,
}

impl Default for RegrowthCriteria {
    fn default() -> Self {
        Self {
            factor: 10.0,
            growth: GrowthCriteria::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegrowthReport {
    pub off_at: f64,
    /// Smallest `x` while treatment was on.
    pub pre_min_x: f64,
    /// Largest `x` after interruption; `None` when there is no post window.
    pub post_max_x: Option<f64>,
    pub regrew: bool,
}

/// Stop treatment at `off_at` and check whether the tumor grows back.
///
/// Requires the uninterrupted treated run to be controllable over at least
/// `criteria.growth.min_horizon`.
pub fn regrowth_experiment(
    p: &ModelParams,
    s0: State,
    off_at: f64,
    cfg: &IntegrationConfig,
    criteria: &RegrowthCriteria,
) -> Result<RegrowthReport> {
    let check_cfg = cfg.with_t_end(cfg.t_end.max(criteria.growth.min_horizon));
    let treated = integrate_forced(s0, p, &check_cfg)?;
    let verdict = classify_growth(&treated, &criteria.growth)?;
    if verdict.outcome != Growth::Controllable {
        return Err(Error::Precondition(
            "tumor growth is uncontrollable under uninterrupted treatment".into(),
        ));
    }
    if off_at >= cfg.t_end {
        let pre_min_x = treated
            .samples
            .iter()
            .filter(|s| s.tau <= cfg.t_end)
            .map(|s| s.state.x)
            .fold(f64::INFINITY, f64::min);
        return Ok(RegrowthReport {
            off_at,
            pre_min_x,
            post_max_x: None,
            regrew: false,
        });
    }
    let traj = integrate_schedule(s0, p, cfg, off_at)?;
    let pre_min_x = traj
        .samples
        .iter()
        .filter(|s| s.tau <= off_at)
        .map(|s| s.state.x)
        .fold(f64::INFINITY, f64::min);
    let post_max_x = traj
        .samples
        .iter()
        .filter(|s| s.tau > off_at)
        .map(|s| s.state.x)
        .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
    Ok(RegrowthReport {
        off_at,
        pre_min_x,
        post_max_x,
        regrew: post_max_x.is_some_and(|m| m > criteria.factor * pre_min_x),
    })
}
