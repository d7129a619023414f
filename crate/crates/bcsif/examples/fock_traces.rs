//! Exact Fock-space traces on a two-site lattice: free partition products,
//! reality of the imaginary-field trace and thermal expectations.
//!
//! `cargo run --release --example fock_traces`

use bcsif::fock::{
    band_partition_check, free_partition_check, reality_periodicity_check, thermal_expectation, Observable,
};
use bcsif::model::ModelParams;
use num_complex::Complex64 as C64;

fn main() -> bcsif::Result<()> {
    let p = ModelParams {
        l: 2,
        beta: 1.5,
        theta: 1.2,
        u: -0.8,
        gamma: 0.3,
        mu: 0.2,
        yhat: Some(vec![1]),
        ..ModelParams::default()
    };
    let free = free_partition_check(&p)?;
    println!("free trace {:.12} vs product {:.12} (rel {:.1e})", free.trace, free.product, free.rel_err);
    let band = band_partition_check(&p, C64::new(0.3, 0.4))?;
    println!("band trace {:.12} vs product {:.12} (rel {:.1e})", band.trace, band.product, band.rel_err);
    let r = reality_periodicity_check(&p)?;
    println!(
        "imag ratio {:.1e}, theta shift {:.1e}, reflection {:.1e}",
        r.max_imag_ratio, r.shift_err, r.reflection_err
    );
    for obs in [Observable::A1, Observable::A1Adjoint, Observable::A2] {
        println!("<{obs:?}> = {:.12}", thermal_expectation(&p, obs)?);
    }
    Ok(())
}
