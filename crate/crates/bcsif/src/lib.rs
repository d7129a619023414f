//! Reduced BCS model on the periodic lattice `Γ(L) = (Z/LZ)^d` with an
//! imaginary magnetic field `iθ/2·(n↑ − n↓)`.
//!
//! * [`model`] — parameters, dispersion, momentum grids and the coupling window.
//! * [`gap`] — gap equation, SSB/ODLRO values and free-energy density.
//! * [`potential`] — effective potentials `F`, `F_L`, their maximizers and the
//!   Laplace-method predictions.
//! * [`covariance`] — two-band free covariance, Matsubara sums, the scale
//!   decomposition and the determinant-bound fuzzer.
//! * [`fock`] — exact Fock-space operators and traces for tiny lattices, and
//!   the Hubbard–Stratonovich quadrature.
//! * [`grassmann`] — finite Grassmann algebra, Gaussian integrals and the
//!   time-discretized formulation of the partition function.
//! * [`cli`] — the `bcsif` command line.
//!
//! Runnable examples live in `examples/`: `gap_solver`, `phase_window`,
//! `effective_potential`, `band_covariance`, `scale_decomposition`,
//! `determinant_bound`, `fock_traces`, `hubbard_stratonovich`,
//! `grassmann_integrals` and `ssb_trend`.

// Negated float comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod covariance;
pub mod error;
pub mod fock;
pub mod gap;
pub mod grassmann;
pub mod model;
pub mod numerics;
pub mod potential;

pub use error::{Error, Result};
