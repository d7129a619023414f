//! Matsubara-frequency scale decomposition `C = Σ_l C_l` and the decay of
//! `‖C̃_l‖_{1,∞}` relative to `min(1,β)M^{−l}`.
//!
//! `cargo run --release --example scale_decomposition`

use std::f64::consts::PI;

use bcsif::covariance::{CovarianceEvaluator, ScaleDecomposition};
use bcsif::model::ModelParams;
use num_complex::Complex64 as C64;

fn main() -> bcsif::Result<()> {
    let p = ModelParams { l: 3, beta: 1.0, theta: 1.0, ..ModelParams::default() };
    let m = 2.0 * PI;
    let eval = CovarianceEvaluator::new(&p, C64::new(0.0, 0.3))?;
    // A fine grid populates several levels; at the minimal h the top level is empty.
    let h = 64.0 * ScaleDecomposition::minimal_h(p.beta, m, p.d);
    let dec = ScaleDecomposition::new(&eval, h, m)?;
    println!("h = {h}, levels = {}", dec.levels());
    for l in 0..dec.levels() {
        let norm = dec.decay_norm(l);
        println!("l={l}  norm={norm:.4e}  ratio to reference={:.4}", norm / dec.decay_reference(l));
    }
    Ok(())
}
