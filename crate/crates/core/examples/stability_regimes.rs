//! Fixed points and their classes in the three untreated regimes,
//! followed by a coarse map of the coexistence point over `(σ, k/α)`.
//!
//! $ cargo run --example stability_regimes

use tumordyn::model::ModelParams;
use tumordyn::stability::{classify, regime_map, sigma_critical};

fn main() {
    let regimes = [
        ("recurrence", ModelParams::new(2.0, 0.2, 0.05)),
        ("dormancy", ModelParams::new(2.0, 0.2, 0.25)),
        ("aggressive tumor", ModelParams::new(1.0, 1.5, 3.0)),
    ];
    for (name, p) in regimes {
        println!("{name}: alpha={} k={} sigma={} (k/alpha = {})", p.alpha, p.k, p.sigma, p.aggressiveness_ratio());
        for fp in classify(&p) {
            let eig: Vec<String> = fp
                .eigenvalues
                .iter()
                .map(|l| format!("{:.6}{:+.6}i", l.re, l.im))
                .collect();
            let loc = fp.location.map(|l| l.coordinates()).unwrap_or_default();
            println!(
                "  {:<3} at {:?}: {} [{}]{}",
                fp.name,
                loc,
                fp.class.as_str(),
                eig.join(", "),
                if fp.physical { "" } else { " (not physical)" }
            );
        }
        match sigma_critical(&p) {
            Some((lo, hi)) => println!("  node/focus transitions at sigma = {lo:.6}, {hi:.6}"),
            None => println!("  no node/focus transition in sigma"),
        }
    }

    println!("\nclass of the coexistence point, alpha = 2");
    let cells = regime_map(2.0, (0.0, 2.0, 9), (0.0, 2.0, 9));
    let mut ratios: Vec<f64> = cells.iter().map(|c| c.ratio).collect();
    ratios.dedup();
    for r in ratios.iter().rev() {
        let row: String = cells
            .iter()
            .filter(|c| c.ratio == *r)
            .map(|c| format!("{:>8}", format!("{}{}", short(c.class.as_str()), if c.physical { "" } else { "*" })))
            .collect();
        println!("k/a={r:4.2} {row}");
    }
    let sigmas: String = cells.iter().filter(|c| c.ratio == 0.0).map(|c| format!("{:>8.2}", c.sigma)).collect();
    println!("  sigma= {sigmas}");
    println!("(* = coexistence point outside the positive quadrant)");
}

fn short(class: &str) -> &str {
    match class {
        "saddle" => "saddle",
        "stable_node" => "s-node",
        "stable_focus" => "s-foc",
        "unstable_node" => "u-node",
        "unstable_focus" => "u-foc",
        _ => "degen",
    }
}
