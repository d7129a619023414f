//! Finite Grassmann algebra: Gaussian integrals by determinants and by Wick
//! pairings, `exp`/`log`, and the time-discretized partition function.
//!
//! `cargo run --release --example grassmann_integrals`

use bcsif::grassmann::{exp_element, log_element, partition_via_grassmann, Covariance, GrassmannElement};
use bcsif::model::ModelParams;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

fn main() -> bcsif::Result<()> {
    let cov = Covariance { table: DMatrix::from_fn(3, 3, |i, j| C64::new(1.0 / (1 + i + j) as f64, 0.1 * i as f64)) };
    let mask = 0b111_111;
    println!("det route {:.12}  wick route {:.12}", cov.monomial_integral(mask), cov.monomial_integral_wick(mask));

    let mut f = GrassmannElement::zero(6)?;
    f.add_monomial(0b001_001, C64::new(0.5, 0.0));
    f.add_monomial(0b010_100, C64::new(0.0, 0.3));
    let back = log_element(&exp_element(&f)?)?;
    println!("|log(exp f) - f| = {:.1e}", back.max_abs_diff(&f));

    let p = ModelParams { l: 1, beta: 1.0, theta: 1.0, u: -0.3, gamma: 0.2, ..ModelParams::default() };
    for h in [2.0, 4.0] {
        let r = partition_via_grassmann(&p, h, [C64::from(0.0); 2])?;
        println!(
            "h={h}: integral {:.10}  trace {:.10}  |diff| {:.2e}  series err {:.1e}",
            r.integral,
            r.trace_ratio,
            (r.integral - r.trace_ratio).norm(),
            r.coefficient_err
        );
    }
    Ok(())
}
