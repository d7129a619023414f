//! Scans the coupling window `c₁Θ^{d+1} < |U| < c₂(1+|log Θ|)^{-1}` as the
//! field approaches the critical value and compares it with the gap.
//!
//! `cargo run --example phase_window`

use std::f64::consts::PI;

use bcsif::gap::solve_gap;
use bcsif::model::{coupling_window, ModelParams};

fn main() -> bcsif::Result<()> {
    let beta = 1.0;
    let crit = 2.0 * PI / beta;
    println!("{:>10} {:>12} {:>12} {:>8} {:>12} {:>12}", "Theta", "lower", "upper", "U", "D(0)", "delta");
    for big_theta in [0.3, 0.1, 0.03, 0.01, 0.005] {
        let theta = crit - 2.0 * big_theta;
        let p0 = ModelParams { beta, theta, u: -0.01, ..ModelParams::default() };
        let w = coupling_window(&p0, 1.0, 1.0)?;
        let u = -0.5 * (w.lower + w.upper);
        let p = ModelParams { u, ..p0 };
        let s = solve_gap(&p, 1e-9, 4096)?;
        let d0 = bcsif::gap::solvability_indicator(&p, 4096);
        println!(
            "{:>10.4} {:>12.4e} {:>12.4e} {:>8.4} {:>12.4e} {:>12.4e}",
            w.big_theta, w.lower, w.upper, u, d0, s.delta
        );
    }
    Ok(())
}
