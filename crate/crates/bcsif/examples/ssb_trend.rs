//! Symmetry-breaking expectation `⟨ψ*_{x↑}ψ*_{x↓}⟩_L` on growing chains next
//! to its large-volume prediction `−(a(γ)−γ)/|U|`.
//!
//! `cargo run --release --example ssb_trend`

use std::f64::consts::PI;

use bcsif::fock::{thermal_expectation, Observable};
use bcsif::model::ModelParams;
use bcsif::potential::laplace_prediction;

fn main() -> bcsif::Result<()> {
    let base = ModelParams { beta: 0.5, theta: 4.0 * PI - 0.1, u: -2.0, gamma: 0.5, ..ModelParams::default() };
    let pred = laplace_prediction(&base, 1e-12, 1 << 14)?;
    println!("delta = {:.6}, prediction = {:.6}", pred.delta, pred.ssb_pred);
    for l in 2..=6 {
        let p = ModelParams { l, ..base.clone() };
        let v = thermal_expectation(&p, Observable::A1)?;
        println!("L={l}: {:.6} (imag {:.1e})", v.re, v.im);
    }
    Ok(())
}
