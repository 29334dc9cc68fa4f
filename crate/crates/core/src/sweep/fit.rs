//! Least-squares fit of the threshold curve `V(β) = A + B/(C + β)^p`.
//!
//! For fixed `(C, p)` the model is linear in `(A, B)`, so those two are
//! solved in closed form and the simplex only searches the `(C, p)` plane.
//! Several starts are run and the lowest residual wins.

use serde::{Deserialize, Serialize};

use super::simplex::{nelder_mead, SimplexOptions};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "p")]
    pub exponent: f64,
    pub rss: f64,
}

/// Threshold curve reported for `α = 2, k = 0.2, σ = 0.05` from `(5.3, 6.7)`.
pub const REFERENCE_CURVE: ThresholdFit = ThresholdFit {
    a: 0.10478,
    b: 0.00044,
    c: 0.05343,
    exponent: 2.7313,
    rss: 0.0,
};

impl ThresholdFit {
    pub fn eval(&self, beta: f64) -> f64 {
        self.a + self.b / (self.c + beta).powf(self.exponent)
    }

    pub fn params(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.exponent]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub c_starts: Vec<f64>,
    pub p_starts: Vec<f64>,
    pub simplex: SimplexOptions,
    /// Extra simplex restarts from the best point of each start.
    pub polish_rounds: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            c_starts: vec![0.01, 0.1, 1.0],
            p_starts: vec![1.0, 2.0, 3.0],
            simplex: SimplexOptions::default(),
            polish_rounds: 3,
        }
    }
}

pub fn fit_threshold(points: &[(f64, f64)]) -> Result<ThresholdFit> {
    fit_threshold_with(points, &FitOptions::default())
}

/// Residual sum of squares and the optimal `(A, B)` for fixed `(C, p)`.
fn project(points: &[(f64, f64)], c: f64, p: f64) -> Option<(f64, f64, f64)> {
    let basis: Vec<f64> = points.iter().map(|&(beta, _)| (c + beta).powf(-p)).collect();
    if basis.iter().any(|g| !g.is_finite()) {
        return None;
    }
    let n = points.len() as f64;
    let g_mean = basis.iter().sum::<f64>() / n;
    let v_mean = points.iter().map(|&(_, v)| v).sum::<f64>() / n;
    let mut sgg = 0.0;
    let mut sgv = 0.0;
    for (g, &(_, v)) in basis.iter().zip(points) {
        sgg += (g - g_mean) * (g - g_mean);
        sgv += (g - g_mean) * (v - v_mean);
    }
    let b = if sgg > 1e-30 * g_mean * g_mean * n && sgg > 0.0 {
        sgv / sgg
    } else {
        0.0
    };
    let a = v_mean - b * g_mean;
    let rss = basis
        .iter()
        .zip(points)
        .map(|(g, &(_, v))| (v - a - b * g).powi(2))
        .sum();
    Some((a, b, rss))
}

/// Multi-start simplex fit. Requires at least six points with distinct `β`.
pub fn fit_threshold_with(points: &[(f64, f64)], opts: &FitOptions) -> Result<ThresholdFit> {
    if points.len() < 6 {
        return Err(Error::InsufficientData(format!(
            "threshold fit needs at least 6 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|(b, v)| !b.is_finite() || !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "non-finite boundary point".into(),
        });
    }
    let mut betas: Vec<f64> = points.iter().map(|p| p.0).collect();
    betas.sort_by(f64::total_cmp);
    if betas.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "beta values must be distinct".into(),
        });
    }
    let beta_min = betas[0];

    let objective = |x: &[f64]| -> f64 {
        let (c, p) = (x[0], x[1]);
        if c + beta_min <= 0.0 || !(p > 0.0) {
            return f64::INFINITY;
        }
        project(points, c, p).map_or(f64::INFINITY, |(_, _, rss)| rss)
    };

    let mut best: Option<([f64; 2], f64)> = None;
    let mut any_converged = false;
    let mut starts = 0;
    for &c0 in &opts.c_starts {
        for &p0 in &opts.p_starts {
            starts += 1;
            // keep the start feasible when β_min is small or zero
            let c0 = c0.max(1e-3 - beta_min);
            let mut x = vec![c0, p0];
            let mut step = vec![0.5 * (c0 + beta_min).abs().max(1e-3), 0.5];
            let mut value = objective(&x);
            let mut converged = false;
            for _ in 0..=opts.polish_rounds {
                let r = nelder_mead(objective, &x, &step, &opts.simplex);
                let improved = r.value < value;
                converged = r.converged;
                if improved || r.value == value {
                    x = r.x;
                    value = r.value;
                }
                step = step.iter().map(|s| s * 0.1).collect();
                if !improved {
                    break;
                }
            }
            any_converged |= converged;
            if value.is_finite() && best.is_none_or(|(_, v)| value < v) {
                best = Some(([x[0], x[1]], value));
            }
        }
    }

    let Some(([c, p], _)) = best else {
        return Err(Error::FitFailure {
            restarts: starts,
            best: [f64::NAN; 4],
            best_rss: f64::INFINITY,
        });
    };
    let (a, b, rss) = project(points, c, p).expect("best point is feasible");
    if !any_converged {
        return Err(Error::FitFailure {
            restarts: starts,
            best: [a, b, c, p],
            best_rss: rss,
        });
    }
    Ok(ThresholdFit {
        a,
        b,
        c,
        exponent: p,
        rss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(curve: &ThresholdFit, n: usize, beta_max: f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let b = beta_max * i as f64 / (n - 1) as f64;
                (b, curve.eval(b))
            })
            .collect()
    }

    #[test]
    fn projection_is_exact_on_model_data() {
        let pts = sample(&REFERENCE_CURVE, 12, 2.0);
        let (a, b, rss) = project(&pts, REFERENCE_CURVE.c, REFERENCE_CURVE.exponent).unwrap();
        assert!((a - REFERENCE_CURVE.a).abs() < 1e-12);
        assert!((b - REFERENCE_CURVE.b).abs() < 1e-15);
        assert!(rss < 1e-28);
    }

    #[test]
    fn round_trip_reference_curve() {
        let pts = sample(&REFERENCE_CURVE, 20, 2.85);
        let fit = fit_threshold(&pts).unwrap();
        for (got, want) in fit.params().iter().zip(REFERENCE_CURVE.params()) {
            assert!(((got - want) / want).abs() < 0.01, "{fit:?}");
        }
        assert!(fit.rss < 1e-12);
    }

    #[test]
    fn constant_data_gives_flat_fit() {
        let pts: Vec<(f64, f64)> = (0..8).map(|i| (0.3 * i as f64, 0.2)).collect();
        let fit = fit_threshold(&pts).unwrap();
        assert!((fit.a - 0.2).abs() < 1e-12);
        assert!(fit.b.abs() < 1e-12);
        assert!(fit.rss < 1e-24);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_threshold(&[(0.0, 1.0); 3]), Err(Error::InsufficientData(_))));
        let dup: Vec<(f64, f64)> = (0..7).map(|i| ((i / 2) as f64, 0.1)).collect();
        assert!(fit_threshold(&dup).is_err());
    }

    #[test]
    fn json_keys() {
        let json = serde_json::to_value(REFERENCE_CURVE).unwrap();
        for key in ["A", "B", "C", "p", "rss"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}
