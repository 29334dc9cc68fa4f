//! The untreated tumor equation as a particle in a cubic potential `U(x)`.
//!
//! $ cargo run --example potential

use tumordyn::model::{potential, potential_curvature, potential_extrema, ModelParams};

fn main() -> tumordyn::Result<()> {
    for p in [ModelParams::new(2.0, 0.2, 0.25), ModelParams::new(1.0, 1.5, 3.0)] {
        let shape = potential_extrema(&p)?;
        println!("alpha={} k={} sigma={}", p.alpha, p.k, p.sigma);
        println!("  x=0     {:?} (U''={:+.4})", shape.kind1, potential_curvature(shape.x1, &p));
        println!(
            "  x={:<6.4}{:?} (U''={:+.4}, U={:+.4})",
            shape.x2,
            shape.kind2,
            potential_curvature(shape.x2, &p),
            potential(shape.x2, &p)
        );

        let hi = if shape.x2 > 0.0 { 2.0 * shape.x2 } else { 2.0 };
        let us: Vec<f64> = (0..=40).map(|i| potential(hi * i as f64 / 40.0, &p)).collect();
        let (lo_u, hi_u) = us.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &u| (a.min(u), b.max(u)));
        for (i, u) in us.iter().enumerate().step_by(4) {
            let bar = ((u - lo_u) / (hi_u - lo_u) * 40.0).round() as usize;
            println!("  {:6.3} {:>10.4} {}", hi * i as f64 / 40.0, u, "#".repeat(bar));
        }
    }
    Ok(())
}
