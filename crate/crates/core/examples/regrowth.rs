//! Interrupting a successful treatment: the tumor comes back.
//!
//! $ cargo run --release --example regrowth

use tumordyn::analysis::{regrowth_experiment, RegrowthCriteria};
use tumordyn::integrator::{integrate_forced, IntegrationConfig};
use tumordyn::model::{ModelParams, State};

fn main() -> tumordyn::Result<()> {
    let p = ModelParams::new(2.0, 0.2, 0.05).with_treatment(0.5, 1.0);
    let s0 = State::new(5.3, 6.7);

    let treated = integrate_forced(s0, &p, &IntegrationConfig::default())?;
    let Some(off_at) = treated.first_time_x_below(1e-3) else {
        println!("treatment never pushed x below 1e-3");
        return Ok(());
    };
    println!("x < 1e-3 first at tau = {off_at:.3}; stopping treatment there and, separately, much later");

    for off_at in [off_at, 150.0] {
        let cfg = IntegrationConfig::default().with_t_end(off_at + 100.0);
        let r = regrowth_experiment(&p, s0, off_at, &cfg, &RegrowthCriteria::default())?;
        println!(
            "off at {:7.3}: treated min x {:.3e}, max x after {:.3e}, regrew: {}",
            r.off_at,
            r.pre_min_x,
            r.post_max_x.unwrap_or(f64::NAN),
            r.regrew
        );
    }
    Ok(())
}
