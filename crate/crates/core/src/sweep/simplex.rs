//! Nelder-Mead downhill simplex.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Stop when the spread of vertex values is below `f_tol * (|f_best| + f_floor)`.
    pub f_tol: f64,
    pub f_floor: f64,
    /// ...and every vertex lies within `x_tol` (relative) of the best one.
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            f_tol: 1e-14,
            f_floor: 1e-300,
            x_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best vertex value after each iteration.
    pub history: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimize `f` from `start`, with initial simplex edges `step[i]` along each axis.
///
/// Non-finite objective values are treated as `+∞`, which keeps the search
/// inside the feasible region once it starts there.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    step: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let n = start.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    verts.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += step[i];
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| eval(v)).collect();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        // order: best first
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        verts = idx.iter().map(|&i| verts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        history.push(vals[0]);

        let spread = vals[n] - vals[0];
        let size = verts[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&verts[0]).map(|(a, b)| (a - b).abs() / b.abs().max(1e-8)))
            .fold(0.0, f64::max);
        if spread.is_finite() && spread <= opts.f_tol * (vals[0].abs() + opts.f_floor) && size <= opts.x_tol {
            converged = true;
            break;
        }
        if spread.is_finite() && spread == 0.0 && size <= opts.x_tol.sqrt() {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| verts[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            (0..n).map(|j| centroid[j] + t * (verts[n][j] - centroid[j])).collect()
        };

        let xr = along(-REFLECT);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = along(-EXPAND);
            let fe = eval(&xe);
            if fe < fr {
                verts[n] = xe;
                vals[n] = fe;
            } else {
                verts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            verts[n] = xr;
            vals[n] = fr;
            continue;
        }
        // outside contraction when the reflection beat the worst vertex, inside otherwise
        let xc = along(if fr < vals[n] { -CONTRACT } else { CONTRACT });
        let fc = eval(&xc);
        if fc < vals[n].min(fr) {
            verts[n] = xc;
            vals[n] = fc;
            continue;
        }
        let best = verts[0].clone();
        for i in 1..=n {
            verts[i] = (0..n).map(|j| best[j] + SHRINK * (verts[i][j] - best[j])).collect();
            vals[i] = eval(&verts[i]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap_or(0);
    SimplexResult {
        x: verts[best].clone(),
        value: vals[best],
        iterations,
        evaluations,
        converged,
        history,
    }
}
