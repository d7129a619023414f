use std::f64::consts::PI;

use bcsif::fock::{
    ann, cre, free_partition_check, reality_periodicity_check, spin_covariance_from_traces, thermal_expectation,
    trace_exp, FockSpace, Observable, Operator, SectorBasis, SpinPoint,
};
use bcsif::grassmann::covariance_g;
use bcsif::model::ModelParams;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

#[test]
fn ladder_operators_satisfy_canonical_anticommutation() {
    let space = FockSpace::new(4).unwrap();
    let n = space.dim();
    for i in 0..4 {
        for j in 0..4 {
            let ci = space.dense(&Operator::term(1.0, vec![ann(i)])).unwrap();
            let cj_dag = space.dense(&Operator::term(1.0, vec![cre(j)])).unwrap();
            let cj = space.dense(&Operator::term(1.0, vec![ann(j)])).unwrap();
            let anti = &ci * &cj_dag + &cj_dag * &ci;
            let expect = if i == j { DMatrix::identity(n, n) } else { DMatrix::zeros(n, n) };
            assert!((anti - expect).norm() < 1e-15);
            assert!((&ci * &cj + &cj * &ci).norm() < 1e-15);
        }
    }
}

#[test]
fn adjoint_is_conjugate_transpose() {
    let space = FockSpace::new(3).unwrap();
    let mut op = Operator::term(C64::new(0.3, 0.7), vec![cre(0), ann(2)]);
    op.push(C64::new(-1.1, 0.2), vec![cre(1), cre(2), ann(0)]);
    let a = space.dense(&op.adjoint()).unwrap();
    let b = space.dense(&op).unwrap().adjoint();
    assert!((a - b).norm() < 1e-15);
}

#[test]
fn capacity_is_enforced() {
    assert!(FockSpace::new(17).is_err());
}

#[test]
fn sector_blocks_reproduce_the_dense_trace() {
    let space = FockSpace::new(4).unwrap();
    let mut h = Operator::zero();
    h.push(0.4, vec![cre(0), ann(1)]);
    h.push(0.4, vec![cre(1), ann(0)]);
    h.push(C64::new(0.0, 0.3), vec![cre(2), ann(2)]);
    h.push(-0.8, vec![cre(0), cre(3), ann(3), ann(0)]);
    let dense = trace_exp(&space.dense(&h).unwrap(), 1.3).unwrap();
    let blocks = SectorBasis::by_number(space).blocks(&h).unwrap();
    let by_block: C64 = blocks.iter().map(|b| trace_exp(b, 1.3).unwrap()).sum();
    assert!((dense - by_block).norm() < 1e-12 * dense.norm());
    let breaking = Operator::term(1.0, vec![cre(0)]);
    assert!(SectorBasis::by_number(space).blocks(&breaking).is_err());
}

#[test]
fn pairing_expectation_is_real_and_self_adjoint() {
    let p = ModelParams { l: 2, beta: 1.2, theta: 2.0, u: -1.5, gamma: 0.4, mu: 0.3, ..ModelParams::default() };
    let a = thermal_expectation(&p, Observable::A1).unwrap();
    let b = thermal_expectation(&p, Observable::A1Adjoint).unwrap();
    assert!(a.im.abs() < 1e-12 && (a - b).norm() < 1e-12);
    assert!(a.re < 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_partition_matches_product(beta in 0.2f64..5.0, t in 0.0f64..1.0, mu in -1.9f64..1.9, l in 1usize..=3, hop in 0u8..=1) {
        let p = ModelParams { beta, theta: t * 2.0 * PI / beta, mu, l, hop, ..ModelParams::default() };
        let r = free_partition_check(&p).unwrap();
        prop_assert!(r.rel_err < 1e-10);
    }

    #[test]
    fn spin_two_point_function_matches_trace(
        beta in 0.3f64..3.0, t in 0.0f64..1.0, mu in -1.5f64..1.5, s in 0.0f64..1.0, u in 0.0f64..1.0,
        up in any::<bool>(), x in 0i64..2,
    ) {
        let p = ModelParams { beta, theta: t * 2.0 * PI / beta, mu, l: 2, ..ModelParams::default() };
        let a = SpinPoint { x: vec![x], up, s: s * beta };
        let b = SpinPoint { x: vec![0], up, s: u * beta };
        let traced = spin_covariance_from_traces(&p, &a, &b).unwrap();
        let closed = covariance_g(&p, &a, &b);
        prop_assert!((traced - closed).norm() < 1e-10 * closed.norm().max(1.0));
    }

    #[test]
    fn interacting_trace_is_real_and_periodic(beta in 0.3f64..2.0, t in 0.0f64..1.0, u in 0.1f64..2.0, gamma in 0.0f64..1.0) {
        let p = ModelParams { beta, theta: t * 2.0 * PI / beta, u: -u, gamma, l: 2, yhat: Some(vec![1]), ..ModelParams::default() };
        let r = reality_periodicity_check(&p).unwrap();
        prop_assert!(r.pass, "{r:?}");
    }
}
