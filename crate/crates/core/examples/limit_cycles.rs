//! Treated trajectories settle on closed orbits whose period locks to the dosing.
//!
//! $ cargo run --release --example limit_cycles

use tumordyn::analysis::detect_cycle;
use tumordyn::integrator::{integrate_forced, IntegrationConfig};
use tumordyn::model::{ModelParams, State};

fn main() -> tumordyn::Result<()> {
    let cfg = IntegrationConfig::default().with_t_end(std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1500.0));
    for beta in [0.5, 1.0, 2.0, 3.0] {
        let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.25, beta);
        let traj = integrate_forced(State::new(5.3, 6.7), &p, &cfg)?;
        let c = detect_cycle(&traj, &p);
        if c.found {
            println!(
                "beta={beta:3.1}: period {:8.4} ({} peak(s), {:.2} dosing periods), x in [{:.4}, {:.4}]",
                c.period,
                c.peaks_per_period,
                c.lock_ratio.unwrap_or(f64::NAN),
                c.x_min,
                c.x_max
            );
        } else {
            println!("beta={beta:3.1}: no cycle, x in [{:.4}, {:.4}]", c.x_min, c.x_max);
        }
    }
    Ok(())
}
