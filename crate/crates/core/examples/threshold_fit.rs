//! Recover the hyperbolic threshold law `V = A + B/(C + β)^p` from noisy samples.
//!
//! $ cargo run --example threshold_fit

use tumordyn::sweep::{fit_threshold, REFERENCE_CURVE};

fn main() -> tumordyn::Result<()> {
    // deterministic pseudo-noise so the output is reproducible
    let mut seed: u64 = 0x2545_f491_4f6c_dd1d;
    let mut noise = move || {
        seed ^= seed << 13;
        seed ^= seed >> 7;
        seed ^= seed << 17;
        (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };

    for amplitude in [0.0, 1e-4, 1e-3] {
        let pts: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let beta = 0.2 + 0.1 * i as f64;
                (beta, REFERENCE_CURVE.eval(beta) + amplitude * noise())
            })
            .collect();
        let fit = fit_threshold(&pts)?;
        println!(
            "noise {amplitude:7.1e}: A={:.5} B={:.3e} C={:.4} p={:.3} rss={:.2e}",
            fit.a, fit.b, fit.c, fit.exponent, fit.rss
        );
    }
    println!(
        "reference:      A={:.5} B={:.3e} C={:.4} p={:.3}",
        REFERENCE_CURVE.a, REFERENCE_CURVE.b, REFERENCE_CURVE.c, REFERENCE_CURVE.exponent
    );
    Ok(())
}
