//! Tumor-lymphocyte interaction model.
//!
//! The dimensional system
//!
//! ```text
//! dX/dt = a X - b X Y
//! dY/dt = d X Y - f Y - K X + u + F cos²(ω t)
//! ```
//!
//! is reduced by the time scale `t0 = 1/sqrt(a f)` and the population scales
//! `X' = sqrt(a f)/d`, `Y' = sqrt(a f)/b` to
//!
//! ```text
//! dx/dτ = α x - x y
//! dy/dτ = x y - y/α - k x + σ + V cos²(β τ)
//! ```
//!
//! Replacing `cos(βτ)` by the displacement `u` of a unit-amplitude linear
//! oscillator (`u'' + β² u = 0`, `u(0) = 1`, `u'(0) = 0`) gives an autonomous
//! four-dimensional system with the same `(x, y)` trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_positive, Error, Result};

/// Raw coefficients of the dimensional model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimensionalParams {
    /// Tumor growth rate `a` (1/time).
    pub a: f64,
    /// Lymphocyte attack coefficient `b` (1/(cells·time)).
    pub b: f64,
    /// Lymphocyte stimulation by tumor contact `d` (1/(cells·time)).
    pub d: f64,
    /// Lymphocyte natural death rate `f` (1/time).
    pub f: f64,
    /// Suppression of lymphocytes by tumor size `K` (1/time).
    #[serde(rename = "K")]
    pub suppression: f64,
    /// Constant lymphocyte influx `u` (cells/time).
    pub u: f64,
    /// Cytokine dose amplitude `F` (cells/time).
    #[serde(rename = "F")]
    pub dose_amplitude: f64,
    /// Dosing angular frequency `ω` (1/time).
    pub omega: f64,
}

impl DimensionalParams {
    pub fn validate(&self) -> Result<()> {
        check_positive("a", self.a)?;
        check_positive("b", self.b)?;
        check_positive("d", self.d)?;
        check_positive("f", self.f)?;
        check_non_negative("K", self.suppression)?;
        check_non_negative("u", self.u)?;
        check_non_negative("F", self.dose_amplitude)?;
        check_non_negative("omega", self.omega)
    }
}

/// Characteristic scales of the nondimensionalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    /// Time scale, inverse of the Lotka-Volterra oscillation frequency.
    pub t0: f64,
    /// Tumor population scale.
    pub tumor: f64,
    /// Lymphocyte population scale.
    pub lymphocyte: f64,
}

/// Dimensionless parameters of the rescaled model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Growth ratio `α = sqrt(a/f)`.
    pub alpha: f64,
    /// Tumor aggressiveness against lymphocytes.
    pub k: f64,
    /// Effective lymphocyte influx.
    pub sigma: f64,
    /// Effective cytokine dose `V`.
    #[serde(rename = "V", default)]
    pub dose: f64,
    /// Dosing frequency `β`; zero means a constant dose.
    #[serde(default)]
    pub beta: f64,
}

impl ModelParams {
    /// Untreated model (`V = 0`).
    pub fn new(alpha: f64, k: f64, sigma: f64) -> Self {
        Self {
            alpha,
            k,
            sigma,
            dose: 0.0,
            beta: 0.0,
        }
    }

    pub fn with_treatment(self, dose: f64, beta: f64) -> Self {
        Self { dose, beta, ..self }
    }

    pub fn untreated(self) -> Self {
        Self { dose: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("alpha", self.alpha)?;
        check_non_negative("k", self.k)?;
        check_non_negative("sigma", self.sigma)?;
        check_non_negative("V", self.dose)?;
        check_non_negative("beta", self.beta)
    }

    /// `k / α`, the ratio that separates the dormant/recurrent branch from the saddle branch.
    pub fn aggressiveness_ratio(&self) -> f64 {
        self.k / self.alpha
    }

    /// Period of the forcing `cos²(βτ)`, `π/β`. `None` for a constant dose.
    pub fn forcing_period(&self) -> Option<f64> {
        (self.beta > 0.0).then(|| std::f64::consts::PI / self.beta)
    }
}

/// Rescaled populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Malignant cells.
    pub x: f64,
    /// Lymphocytes. May go negative during integration; see `analysis`.
    pub y: f64,
}

impl State {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Lift into the autonomous system with the oscillator at `u = 1, z = 0`.
    pub fn extend(self) -> ExtendedState {
        ExtendedState {
            x: self.x,
            y: self.y,
            u: 1.0,
            z: 0.0,
        }
    }
}

impl From<[f64; 2]> for State {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<State> for [f64; 2] {
    fn from(s: State) -> Self {
        [s.x, s.y]
    }
}

/// Populations plus the dosing oscillator (displacement `u`, velocity `z`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub x: f64,
    pub y: f64,
    pub u: f64,
    pub z: f64,
}

impl ExtendedState {
    pub fn project(self) -> State {
        State::new(self.x, self.y)
    }

    /// `u² + (z/β)²`, identically one along exact trajectories when `β > 0`.
    pub fn oscillator_energy(&self, beta: f64) -> f64 {
        self.u * self.u + (self.z / beta).powi(2)
    }
}

impl From<[f64; 4]> for ExtendedState {
    fn from(v: [f64; 4]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            u: v[2],
            z: v[3],
        }
    }
}

impl From<ExtendedState> for [f64; 4] {
    fn from(s: ExtendedState) -> Self {
        [s.x, s.y, s.u, s.z]
    }
}

/// Nature of a potential extremum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Minimum,
    Maximum,
    Degenerate,
}

impl ExtremumKind {
    fn from_curvature(c: f64) -> Self {
        if c > 0.0 {
            ExtremumKind::Minimum
        } else if c < 0.0 {
            ExtremumKind::Maximum
        } else {
            ExtremumKind::Degenerate
        }
    }
}

/// Extrema of the mechanical-analogue potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialShape {
    pub x1: f64,
    pub x2: f64,
    pub kind1: ExtremumKind,
    pub kind2: ExtremumKind,
}

/// Map dimensional coefficients to the dimensionless model and its scales.
pub fn rescale(p: &DimensionalParams) -> Result<(ModelParams, Scales)> {
    p.validate()?;
    let rate = (p.a * p.f).sqrt();
    let model = ModelParams {
        alpha: (p.a / p.f).sqrt(),
        k: p.suppression * p.b / (p.d * rate),
        sigma: p.u * p.b / (p.a * p.f),
        dose: p.dose_amplitude * p.b / (p.a * p.f),
        beta: p.omega / rate,
    };
    let scales = Scales {
        t0: 1.0 / rate,
        tumor: rate / p.d,
        lymphocyte: rate / p.b,
    };
    Ok((model, scales))
}

/// Vector field of the periodically forced system at time `tau`.
#[inline]
pub fn rhs_forced(s: State, p: &ModelParams, tau: f64) -> State {
    let c = (p.beta * tau).cos();
    State {
        x: p.alpha * s.x - s.x * s.y,
        y: s.x * s.y - s.y / p.alpha - p.k * s.x + p.sigma + p.dose * c * c,
    }
}

/// Vector field of the autonomous lift.
#[inline]
pub fn rhs_autonomous(s: ExtendedState, p: &ModelParams) -> ExtendedState {
    ExtendedState {
        x: p.alpha * s.x - s.x * s.y,
        y: s.x * s.y - s.y / p.alpha - p.k * s.x + p.sigma + p.dose * s.u * s.u,
        u: s.z,
        z: -p.beta * p.beta * s.u,
    }
}

/// Potential of the equivalent particle motion, `U(0) = 0`.
///
/// Uses the linear forcing coefficient `1 - σ` obtained by eliminating `y`
/// between the two untreated equations.
pub fn potential(x: f64, p: &ModelParams) -> f64 {
    -(p.k - p.alpha) * x.powi(3) / 3.0 - 0.5 * (1.0 - p.sigma) * x * x
}

/// Second derivative of [`potential`].
pub fn potential_curvature(x: f64, p: &ModelParams) -> f64 {
    -2.0 * (p.k - p.alpha) * x - (1.0 - p.sigma)
}

/// Locations and kinds of the two extrema of [`potential`].
pub fn potential_extrema(p: &ModelParams) -> Result<PotentialShape> {
    if p.k == p.alpha {
        return Err(Error::DegenerateCubic { alpha: p.alpha });
    }
    let x2 = coexistence_x(p);
    let kind1 = ExtremumKind::from_curvature(potential_curvature(0.0, p));
    let kind2 = if x2 == 0.0 {
        ExtremumKind::Degenerate
    } else {
        ExtremumKind::from_curvature(potential_curvature(x2, p))
    };
    Ok(PotentialShape {
        x1: 0.0,
        x2,
        kind1,
        kind2,
    })
}

/// Tumor coordinate of the coexistence state, `(1 - σ)/(α - k)`.
///
/// Shared by the potential extremum and the fixed point so both are bitwise equal.
pub(crate) fn coexistence_x(p: &ModelParams) -> f64 {
    (p.sigma - 1.0) / (p.k - p.alpha)
}
