//! Controllable/uncontrollable map over dose `V` and frequency `β`, and the
//! threshold boundary between the two.
//!
//! $ cargo run --release --example phase_diagram -- 24
//!
//! The optional argument is the number of grid points per axis (default 16).

use std::time::Instant;

use tumordyn::model::{ModelParams, State};
use tumordyn::sweep::{extract_boundary, fit_threshold, run_sweep, AxisRange, SweepSpec};

fn main() -> tumordyn::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(16);
    let spec = SweepSpec::new(ModelParams::new(2.0, 0.2, 0.05), State::new(5.3, 6.7)).with_axes(
        AxisRange { min: 0.0, max: 0.6, n },
        AxisRange { min: 0.0, max: 3.0, n },
    );
    let start = Instant::now();
    let grid = run_sweep(&spec)?;
    eprintln!("{} cells in {:.1?}", n * n, start.elapsed());

    // rows: V from top to bottom, columns: β
    for (i, v) in grid.v_axis.iter().enumerate().rev() {
        let row: String = (0..grid.beta_axis.len())
            .map(|j| match grid.cell(i, j).label() {
                "controllable" => '.',
                "uncontrollable" => '#',
                _ => '?',
            })
            .collect();
        println!("V={v:5.3} {row}");
    }
    println!("        beta 0 .. 3   ('#' uncontrollable)");

    let boundary = extract_boundary(&grid);
    println!("\nthreshold dose by frequency:");
    for b in &boundary {
        println!("  beta={:5.3}  V*={:.4}{}", b.beta, b.v_threshold, if b.monotone { "" } else { "  (non-monotone column)" });
    }
    let pts: Vec<(f64, f64)> = boundary.iter().filter(|b| b.beta >= 0.2).map(|b| (b.beta, b.v_threshold)).collect();
    match fit_threshold(&pts) {
        Ok(fit) => println!(
            "\nV*(beta) = {:.4} + {:.3e}/({:.4} + beta)^{:.3}  (rss {:.2e})",
            fit.a, fit.b, fit.c, fit.exponent, fit.rss
        ),
        Err(e) => println!("\nno fit: {e}"),
    }
    Ok(())
}
