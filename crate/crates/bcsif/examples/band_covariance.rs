//! Two-band free covariance: closed form, Matsubara sum and exact
//! time-ordered traces at the same arguments.
//!
//! `cargo run --release --example band_covariance`

use bcsif::covariance::{BandPoint, CovarianceEvaluator};
use bcsif::fock::covariance_from_traces;
use bcsif::model::ModelParams;
use num_complex::Complex64 as C64;

fn main() -> bcsif::Result<()> {
    let p = ModelParams { l: 2, beta: 1.0, theta: 1.0, ..ModelParams::default() };
    let phi = C64::new(0.4, -0.2);
    let eval = CovarianceEvaluator::new(&p, phi)?;
    let h = 8.0;
    for (x, y) in [
        (BandPoint::new(1, vec![0], 0.25), BandPoint::new(1, vec![1], 0.75)),
        (BandPoint::new(2, vec![1], 0.5), BandPoint::new(1, vec![0], 0.125)),
        (BandPoint::new(2, vec![0], 0.0), BandPoint::new(2, vec![0], 0.0)),
    ] {
        let closed = eval.covariance(&x, &y)?;
        let sum = eval.covariance_matsubara(h, &x, &y)?;
        let traces = covariance_from_traces(&p, phi, &x, &y)?;
        println!("{x:?} {y:?}\n  closed {closed:.12}\n  matsubara {sum:.12}\n  traces {traces:.12}");
    }
    Ok(())
}
