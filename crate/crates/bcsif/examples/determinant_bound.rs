//! Samples the Gram-type determinant bound `|det(⟨u_i,v_j⟩C(X_i,Y_j))| ≤ D^n`
//! at random arguments.
//!
//! `cargo run --release --example determinant_bound`

use bcsif::covariance::determinant_bound_fuzz;
use bcsif::model::ModelParams;
use num_complex::Complex64 as C64;

fn main() -> bcsif::Result<()> {
    let p = ModelParams { l: 2, beta: 1.0, theta: 1.0, ..ModelParams::default() };
    for n in [1, 2, 4, 8] {
        let r = determinant_bound_fuzz(&p, C64::new(0.0, 0.5), n, 4, 2000, 7)?;
        println!(
            "n={n}  violations={}  max ratio={:.4}  gram violations={}  gram max ratio={:.4}",
            r.violations, r.max_ratio, r.gram_violations, r.gram_max_ratio
        );
    }
    Ok(())
}
