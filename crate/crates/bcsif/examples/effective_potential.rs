//! Effective potential of the auxiliary field: finite-volume maximizers
//! `a_L(γ)`, `Δ_L` against their continuum limits, and the Hessian identity.
//!
//! `cargo run --release --example effective_potential`

use std::f64::consts::PI;

use bcsif::model::ModelParams;
use bcsif::potential::{grad_hess, laplace_prediction, maximize_f_l, maximize_f_l_gamma, Measure};

fn main() -> bcsif::Result<()> {
    let base = ModelParams { beta: 1.0, theta: 2.0 * PI - 0.2, u: -1.0, gamma: 0.3, ..ModelParams::default() };
    let lim = laplace_prediction(&base, 1e-13, 1 << 14)?;
    println!("a(gamma) = {:.12}  delta = {:.12}  ssb ~ {:.6}", lim.a_gamma, lim.delta, lim.ssb_pred);
    for l in [8, 16, 32, 64, 128] {
        let p = ModelParams { l, ..base.clone() };
        let a_l = maximize_f_l_gamma(&p, 1e-13)?;
        let d_l = maximize_f_l(&p, 1e-13)?;
        let (_, h) = grad_hess(&p, Measure::Lattice, [a_l, 0.0]);
        println!(
            "L={l:>4}  |a_L-a|={:.3e}  |D_L-D|={:.3e}  d2F/dx2^2 + 2g/(|U|a) = {:.1e}",
            (a_l - lim.a_gamma).abs(),
            (d_l - lim.delta).abs(),
            h[1][1] + 2.0 * p.gamma / (p.abs_u() * a_l)
        );
    }
    Ok(())
}
