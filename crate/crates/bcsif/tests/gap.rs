use std::f64::consts::PI;

use bcsif::gap::{a_of_gamma, free_energy_density, gap_residual, monotonicity_check, solvability_indicator, solve_gap};
use bcsif::model::ModelParams;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.3f64..4.0, 0.0f64..1.0, -1.9f64..1.9, 0.2f64..5.0, 0u8..=1).prop_map(|(beta, t, mu, u, hop)| ModelParams {
        beta,
        theta: t * 2.0 * PI / beta,
        mu,
        u: -u,
        hop,
        ..ModelParams::default()
    })
}

#[test]
fn large_gap_residual_tends_to_minus_two_over_u() {
    let p = ModelParams { u: -1.0, ..ModelParams::default() };
    assert!((gap_residual(&p, 1e6, 512) + 2.0).abs() < 1e-5);
}

#[test]
fn kernel_is_monotone_for_admissible_epsilon() {
    for eps in [-0.99, -0.5, 0.0, 0.5, 1.0] {
        assert!(monotonicity_check(eps, 2000).unwrap());
    }
    assert!(monotonicity_check(-1.0, 10).is_err());
}

#[test]
fn quadrature_converges_under_node_doubling() {
    for big_theta in [1e-3, 0.1, 1.0] {
        let p = ModelParams { beta: 1.0, theta: 2.0 * PI - 2.0 * big_theta, u: -1.0, ..ModelParams::default() };
        for delta in [0.0, 0.05, 0.5] {
            let a = gap_residual(&p, delta, 256);
            let b = gap_residual(&p, delta, 512);
            assert!((a - b).abs() < 1e-6, "Θ={big_theta} Δ={delta}: {a} vs {b}");
        }
    }
    let p = ModelParams { d: 2, beta: 1.0, theta: 1.0, u: -1.0, ..ModelParams::default() };
    assert!((gap_residual(&p, 0.2, 128) - gap_residual(&p, 0.2, 256)).abs() < 1e-6);
}

#[test]
fn free_energy_is_stationary_at_the_gap() {
    let p = ModelParams { beta: 2.0, theta: 2.5, u: -2.0, mu: 0.3, ..ModelParams::default() };
    let sol = solve_gap(&p, 1e-13, 4096).unwrap();
    assert!(sol.delta > 0.0);
    let h = 1e-5;
    let f = |x: f64| free_energy_density(&p, x, 4096).unwrap();
    let slope = (f(sol.delta + h) - f(sol.delta - h)) / (2.0 * h);
    assert!(slope.abs() < 1e-8, "{slope}");
}

#[test]
fn a_of_gamma_solves_its_equation() {
    let p = ModelParams { beta: 2.0, theta: 2.5, u: -2.0, gamma: 0.3, ..ModelParams::default() };
    let a = a_of_gamma(&p, 1e-13, 4096).unwrap();
    let delta = solve_gap(&p, 1e-13, 4096).unwrap().delta;
    assert!(a > delta);
    let g = a * gap_residual(&p, a, 4096) + 2.0 * p.gamma / p.abs_u();
    assert!(g.abs() < 1e-12, "{g}");
    assert!(a_of_gamma(&ModelParams { gamma: 0.0, ..p }, 1e-12, 256).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn residual_is_strictly_decreasing(p in params()) {
        let mut last = gap_residual(&p, 0.0, 256);
        for i in 1..=20 {
            let r = gap_residual(&p, 0.15 * i as f64, 256);
            prop_assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn solution_contract(p in params()) {
        let tol = 1e-10;
        let s = solve_gap(&p, tol, 1024).unwrap();
        prop_assert_eq!(s.solvable, solvability_indicator(&p, 1024) > 0.0);
        if s.solvable {
            prop_assert!(s.delta > 0.0 && s.residual.abs() <= tol);
        } else {
            prop_assert_eq!(s.delta, 0.0);
        }
        prop_assert!((s.odlro - s.ssb * s.ssb).abs() <= f64::EPSILON * s.odlro.max(1.0));
        prop_assert!((s.ssb + s.delta / p.abs_u()).abs() < 1e-15);
    }
}
