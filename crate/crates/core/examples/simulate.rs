//! Rescale a dimensional parameter set, integrate it and classify the outcome.
//!
//! $ cargo run --example simulate > trajectory.csv

use tumordyn::analysis::{classify_growth, GrowthCriteria};
use tumordyn::integrator::{describe, integrate_forced, IntegrationConfig};
use tumordyn::model::{rescale, DimensionalParams, State};

fn main() -> tumordyn::Result<()> {
    let raw = DimensionalParams {
        a: 4.0,
        b: 1.0,
        d: 1.0,
        f: 1.0,
        suppression: 0.2,
        u: 0.25,
        dose_amplitude: 0.0,
        omega: 0.0,
    };
    let (p, scales) = rescale(&raw)?;
    eprintln!("rescaled: {p:?}");
    eprintln!("time unit {:.4}, tumor unit {:.4}, lymphocyte unit {:.4}", scales.t0, scales.tumor, scales.lymphocyte);

    let cfg = IntegrationConfig::default().with_t_end(200.0);
    let traj = integrate_forced(State::new(5.3, 6.7), &p, &cfg)?;
    eprintln!("{}", describe(&traj));

    let verdict = classify_growth(&traj, &GrowthCriteria::default())?;
    eprintln!("growth: {} (x stays below {:.4})", verdict.outcome.as_str(), verdict.x_bound);

    traj.write_csv(&mut std::io::stdout().lock())?;
    Ok(())
}
