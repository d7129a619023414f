use std::f64::consts::PI;

use bcsif::model::ModelParams;
use bcsif::potential::{
    eval_f, eval_f_l, eval_potential, eval_radial, grad_hess, maximize_f_l, maximize_f_l_gamma, potential_report,
    Measure,
};
use proptest::prelude::*;

#[test]
fn lattice_potential_converges_to_continuum() {
    let p = ModelParams { mu: 0.5, beta: 2.0, theta: 0.0, u: -1.0, ..ModelParams::default() };
    let x = [0.3, 0.1];
    let exact = eval_f(&p, x, 1 << 14);
    let errs: Vec<f64> =
        [8, 16, 32, 64].iter().map(|&l| (eval_f_l(&ModelParams { l, ..p.clone() }, x) - exact).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn potential_is_even_in_second_component() {
    let p = ModelParams { l: 12, gamma: 0.4, theta: 1.0, ..ModelParams::default() };
    for x in [[0.2, 0.7], [-1.0, 0.3], [2.0, 1.5]] {
        assert_eq!(eval_f_l(&p, x), eval_f_l(&p, [x[0], -x[1]]));
    }
}

#[test]
fn radial_maximizer_is_global_on_a_grid() {
    let p = ModelParams { l: 32, beta: 2.0, theta: 2.5, u: -2.0, ..ModelParams::default() };
    let d = maximize_f_l(&p, 1e-13).unwrap();
    assert!(d > 0.0);
    let top = eval_radial(&p, Measure::Lattice, d);
    for i in 0..=2000 {
        let x = (d + 5.0) * i as f64 / 2000.0;
        assert!(eval_radial(&p, Measure::Lattice, x) <= top + 1e-14);
    }
}

#[test]
fn vanishing_gamma_maximizer_reduces_to_radial() {
    let p = ModelParams { l: 32, beta: 2.0, theta: 2.5, u: -2.0, gamma: 1e-8, ..ModelParams::default() };
    let a = maximize_f_l_gamma(&p, 1e-13).unwrap();
    let d = maximize_f_l(&p, 1e-13).unwrap();
    assert!((a - d).abs() < 1e-4, "{a} vs {d}");
}

#[test]
fn report_at_maximizer_is_stationary_and_concave() {
    let p = ModelParams { beta: 1.0, theta: 2.0 * PI - 0.2, u: -1.0, gamma: 0.3, ..ModelParams::default() };
    let r = potential_report(&p, Measure::Continuum { nodes: 4096 }, 1e-13).unwrap();
    assert!(r.gradient[0].hypot(r.gradient[1]) <= 1e-8 * (1.0 + r.value.abs()));
    let h = r.hessian;
    assert!(h[0][0] < 0.0 && h[0][0] * h[1][1] - h[0][1] * h[1][0] > 0.0);
    let expected = -2.0 * p.gamma / (p.abs_u() * r.maximizer[0]);
    assert!((r.second_derivative_at_max - expected).abs() < 1e-6 * expected.abs());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gradient_matches_finite_differences(
        x1 in -2.0f64..2.0, x2 in -2.0f64..2.0, gamma in 0.0f64..1.0, t in 0.0f64..1.0, l in 2usize..24,
    ) {
        let p = ModelParams { l, theta: t * 2.0 * PI, gamma, u: -1.3, ..ModelParams::default() };
        let (g, _) = grad_hess(&p, Measure::Lattice, [x1, x2]);
        let h = 1e-5;
        let f = |y: [f64; 2]| eval_potential(&p, Measure::Lattice, y);
        let fd = [
            (f([x1 + h, x2]) - f([x1 - h, x2])) / (2.0 * h),
            (f([x1, x2 + h]) - f([x1, x2 - h])) / (2.0 * h),
        ];
        for j in 0..2 {
            prop_assert!((g[j] - fd[j]).abs() <= 1e-5 * fd[j].abs().max(1e-2));
        }
    }
}
