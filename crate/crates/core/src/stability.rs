//! Fixed points of the untreated system and their linear stability.
//!
//! The tumor-free point `L0 = (0, ασ)` has real eigenvalues `α(1-σ)` and `-1/α`.
//! The coexistence point `L1 = ((1-σ)/(α-k), α)` has the Jacobian
//! `[[0, -x1], [α-k, x1 - 1/α]]`, trace `2T` with `T = (k - ασ)/(2α(α-k))`
//! and determinant `1 - σ`. Under treatment the autonomous lift adds the
//! oscillator pair `±iβ` to both spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{coexistence_x, ExtendedState, ModelParams, State};

/// Real parts (and eigenvalues) smaller than this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Saddle,
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    /// Purely imaginary pair; linearization says nothing about asymptotic behavior.
    CenterCandidate,
    /// A zero eigenvalue, or a point that does not exist (`k = α`).
    Degenerate,
}

impl StabilityClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            StabilityClass::Saddle => "saddle",
            StabilityClass::StableNode => "stable_node",
            StabilityClass::StableFocus => "stable_focus",
            StabilityClass::UnstableNode => "unstable_node",
            StabilityClass::UnstableFocus => "unstable_focus",
            StabilityClass::CenterCandidate => "center_candidate",
            StabilityClass::Degenerate => "degenerate",
        }
    }

    pub fn is_stable(&self) -> bool {
        matches!(self, StabilityClass::StableNode | StabilityClass::StableFocus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Location {
    Planar(State),
    Extended(ExtendedState),
}

impl Location {
    pub fn coordinates(&self) -> Vec<f64> {
        match self {
            Location::Planar(s) => vec![s.x, s.y],
            Location::Extended(s) => vec![s.x, s.y, s.u, s.z],
        }
    }

    pub fn planar(&self) -> State {
        match self {
            Location::Planar(s) => *s,
            Location::Extended(s) => s.project(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub name: String,
    /// `None` when the point does not exist (`k = α` for `L1`).
    pub location: Option<Location>,
    /// Serialized as `[re, im]` pairs.
    pub eigenvalues: Vec<Complex64>,
    pub class: StabilityClass,
    /// Location lies in the closed first quadrant.
    pub physical: bool,
}

/// Tumor-free and coexistence points; `L1` is `None` when `k = α`.
pub fn fixed_points(p: &ModelParams) -> (State, Option<State>) {
    let l0 = State::new(0.0, p.alpha * p.sigma);
    let l1 = (p.k != p.alpha).then(|| State::new(coexistence_x(p), p.alpha));
    (l0, l1)
}

/// `(λ+, λ-)` at `L0`, written as the half-trace plus/minus the absolute half-gap.
pub fn eigenvalues_l0(p: &ModelParams) -> (f64, f64) {
    let a = p.alpha;
    let g = a * a * (1.0 - p.sigma);
    let mid = (g - 1.0) / (2.0 * a);
    let half_gap = ((g + 1.0) / (2.0 * a)).abs();
    (mid + half_gap, mid - half_gap)
}

/// Half-trace of the Jacobian at `L1`.
fn l1_half_trace(p: &ModelParams) -> f64 {
    (p.k - p.alpha * p.sigma) / (2.0 * p.alpha * (p.alpha - p.k))
}

/// Discriminant `T² - (1 - σ)` of the `L1` characteristic polynomial.
pub fn l1_discriminant(p: &ModelParams) -> f64 {
    let t = l1_half_trace(p);
    t * t - (1.0 - p.sigma)
}

/// `(λ+, λ-) = T ± sqrt(T² - (1 - σ))` at `L1`.
pub fn eigenvalues_l1(p: &ModelParams) -> Result<(Complex64, Complex64)> {
    if p.k == p.alpha {
        return Err(Error::DegenerateCubic { alpha: p.alpha });
    }
    let t = l1_half_trace(p);
    let disc = l1_discriminant(p);
    let root = if disc >= 0.0 {
        Complex64::new(disc.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-disc).sqrt())
    };
    let t = Complex64::new(t, 0.0);
    Ok((t + root, t - root))
}

/// Values of `σ` at which the `L1` eigenvalues switch between real and complex,
/// in ascending order. `None` when `(α-k)² - k/α ≤ -1`.
///
/// They are the roots of
/// `α²σ² - 2α[k - 2α(α-k)²]σ + k² - 4α²(α-k)² = 0`.
pub fn sigma_critical(p: &ModelParams) -> Option<(f64, f64)> {
    let a = p.alpha;
    let k = p.k;
    let gap = a - k;
    let radicand = gap * gap - k / a + 1.0;
    if !(radicand > 0.0) || gap == 0.0 {
        return None;
    }
    let qa = a * a;
    let qb = -2.0 * a * (k - 2.0 * a * gap * gap);
    let qc = k * k - 4.0 * a * a * gap * gap;
    // sqrt(qb² - 4 qa qc) = 4α²|α-k|·sqrt(radicand)
    let sq = 4.0 * a * a * gap.abs() * radicand.sqrt();
    // Cancellation-free pair: one root from the quadratic formula, the other from Vieta.
    let q = -0.5 * (qb + qb.signum() * sq);
    let (r1, r2) = if q == 0.0 {
        let r = -qb / (2.0 * qa);
        (r, r)
    } else {
        (q / qa, qc / q)
    };
    Some((r1.min(r2), r1.max(r2)))
}

/// Planar classification of an eigenvalue pair.
pub fn classify_pair(l1: Complex64, l2: Complex64) -> StabilityClass {
    let zero = |z: Complex64| z.re.abs() < ZERO_TOL && z.im.abs() < ZERO_TOL;
    if zero(l1) || zero(l2) {
        return StabilityClass::Degenerate;
    }
    if l1.im.abs() >= ZERO_TOL || l2.im.abs() >= ZERO_TOL {
        let re = l1.re;
        return if re.abs() < ZERO_TOL {
            StabilityClass::CenterCandidate
        } else if re < 0.0 {
            StabilityClass::StableFocus
        } else {
            StabilityClass::UnstableFocus
        };
    }
    let (a, b) = (l1.re, l2.re);
    if a.abs() < ZERO_TOL || b.abs() < ZERO_TOL {
        StabilityClass::Degenerate
    } else if a < 0.0 && b < 0.0 {
        StabilityClass::StableNode
    } else if a > 0.0 && b > 0.0 {
        StabilityClass::UnstableNode
    } else {
        StabilityClass::Saddle
    }
}

fn in_first_quadrant(coords: &[f64]) -> bool {
    coords.iter().all(|&c| c >= 0.0)
}

fn planar_report(name: &str, location: State, eig: (Complex64, Complex64)) -> FixedPointReport {
    FixedPointReport {
        name: name.to_owned(),
        location: Some(Location::Planar(location)),
        eigenvalues: vec![eig.0, eig.1],
        class: classify_pair(eig.0, eig.1),
        physical: in_first_quadrant(&[location.x, location.y]),
    }
}

fn missing_report(name: &str) -> FixedPointReport {
    FixedPointReport {
        name: name.to_owned(),
        location: None,
        eigenvalues: Vec::new(),
        class: StabilityClass::Degenerate,
        physical: false,
    }
}

/// Reports for `L0` and `L1` of the untreated system, in that order.
///
/// Points outside the first quadrant keep their eigenvalues and class and are
/// flagged through `physical`.
pub fn classify(p: &ModelParams) -> Vec<FixedPointReport> {
    let (l0, l1) = fixed_points(p);
    let (a, b) = eigenvalues_l0(p);
    let mut out = vec![planar_report(
        "L0",
        l0,
        (Complex64::new(a, 0.0), Complex64::new(b, 0.0)),
    )];
    out.push(match (l1, eigenvalues_l1(p)) {
        (Some(l1), Ok(eig)) => planar_report("L1", l1, eig),
        _ => missing_report("L1"),
    });
    out
}

/// Fixed points `L0*`, `L1*` of the autonomous lift.
///
/// The spectrum is the planar one plus `±iβ`; with a purely imaginary pair
/// present these are reported as center-manifold candidates.
pub fn extended_fixed_points(p: &ModelParams) -> Vec<FixedPointReport> {
    let osc = [Complex64::new(0.0, p.beta), Complex64::new(0.0, -p.beta)];
    classify(p)
        .into_iter()
        .map(|r| match r.location {
            Some(loc) => {
                let s = loc.planar();
                let ext = ExtendedState {
                    x: s.x,
                    y: s.y,
                    u: 0.0,
                    z: 0.0,
                };
                let mut eigenvalues = r.eigenvalues;
                eigenvalues.extend(osc);
                FixedPointReport {
                    name: format!("{}*", r.name),
                    location: Some(Location::Extended(ext)),
                    eigenvalues,
                    class: if r.class == StabilityClass::Degenerate {
                        StabilityClass::Degenerate
                    } else {
                        StabilityClass::CenterCandidate
                    },
                    physical: r.physical,
                }
            }
            None => missing_report(&format!("{}*", r.name)),
        })
        .collect()
}

/// Stability summary emitted by the `stability` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub params: ModelParams,
    pub fixed_points: Vec<FixedPointReport>,
    pub sigma_critical: Option<[f64; 2]>,
}

pub fn report(p: &ModelParams, extended: bool) -> StabilityReport {
    StabilityReport {
        params: *p,
        fixed_points: if extended {
            extended_fixed_points(p)
        } else {
            classify(p)
        },
        sigma_critical: sigma_critical(p).map(|(a, b)| [a, b]),
    }
}

/// One cell of the `(σ, k/α)` regime map of `L1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub sigma: f64,
    pub ratio: f64,
    pub class: StabilityClass,
    pub physical: bool,
}

/// Classify `L1` over a `(σ, k/α)` lattice at fixed `α`; rows run over `ratio`.
pub fn regime_map(alpha: f64, sigma: (f64, f64, usize), ratio: (f64, f64, usize)) -> Vec<RegimeCell> {
    let axis = |(lo, hi, n): (f64, f64, usize)| -> Vec<f64> {
        (0..n)
            .map(|i| if n == 1 { lo } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect()
    };
    let sigmas = axis(sigma);
    let mut out = Vec::with_capacity(sigma.2 * ratio.2);
    for r in axis(ratio) {
        for &s in &sigmas {
            let p = ModelParams::new(alpha, r * alpha, s);
            let l1 = classify(&p).swap_remove(1);
            out.push(RegimeCell {
                sigma: s,
                ratio: r,
                class: l1.class,
                physical: l1.physical,
            });
        }
    }
    out
}

pub fn regime_map_csv(cells: &[RegimeCell]) -> String {
    let mut out = String::from("sigma,k_over_alpha,class,physical\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{}\n",
            crate::integrator::format_number(c.sigma),
            crate::integrator::format_number(c.ratio),
            c.class.as_str(),
            c.physical
        ));
    }
    out
}
