//! Hubbard–Stratonovich representation of the interacting partition function
//! and correlations as Gauss–Hermite integrals over the auxiliary field,
//! compared with exact traces.
//!
//! `cargo run --release --example hubbard_stratonovich`

use bcsif::fock::{exact_ratio, hs_correlation, hs_partition, Insertion};
use bcsif::model::ModelParams;

fn main() -> bcsif::Result<()> {
    let p =
        ModelParams { l: 2, beta: 1.0, theta: 1.0, u: -0.5, gamma: 0.2, yhat: Some(vec![1]), ..ModelParams::default() };
    let z = hs_partition(&p, 24, 24)?;
    println!(
        "Z ratio: quadrature {:.14}  exact {:.14}  tail {:.1e}",
        z.value,
        exact_ratio(&p, Insertion::None)?,
        z.tail
    );
    for (j, ins) in [(1, Insertion::A1), (2, Insertion::A2)] {
        let c = hs_correlation(&p, j, 24, 24)?;
        println!("A{j}: quadrature {:.14}  exact {:.14}", c.value, exact_ratio(&p, ins)?);
    }
    Ok(())
}
