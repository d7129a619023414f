//! Solves the gap equation across the imaginary-field range at fixed coupling.
//!
//! `cargo run --example gap_solver`

use std::f64::consts::PI;

use bcsif::gap::solve_gap;
use bcsif::model::ModelParams;

fn main() -> bcsif::Result<()> {
    let base = ModelParams { beta: 2.0, u: -2.0, mu: 0.3, ..ModelParams::default() };
    println!("{:>8} {:>8} {:>12} {:>12} {:>12} {:>9}", "theta", "Theta", "delta", "ssb", "free_en", "solvable");
    for i in 0..8 {
        let theta = i as f64 * (2.0 * PI / base.beta) / 8.0;
        let p = ModelParams { theta, ..base.clone() };
        let s = solve_gap(&p, 1e-12, 2048)?;
        println!(
            "{:>8.4} {:>8.4} {:>12.8} {:>12.8} {:>12.8} {:>9}",
            theta,
            p.big_theta(),
            s.delta,
            s.ssb,
            s.free_energy,
            s.solvable
        );
    }
    Ok(())
}
