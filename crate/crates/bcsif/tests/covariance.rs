use std::f64::consts::PI;

use bcsif::covariance::{
    chi, determinant_bound_fuzz, level_propagator, matsubara_frequencies, BandPoint, CovarianceEvaluator,
};
use bcsif::model::ModelParams;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn band_params() -> impl Strategy<Value = (ModelParams, C64)> {
    (0.3f64..3.0, 0.0f64..1.0, -1.5f64..1.5, 1usize..=3, -1.0f64..1.0, -1.0f64..1.0).prop_map(
        |(beta, t, mu, l, re, im)| {
            (ModelParams { beta, theta: t * 2.0 * PI / beta, mu, l, ..ModelParams::default() }, C64::new(re, im))
        },
    )
}

#[test]
fn cutoff_function_shape() {
    assert_eq!(chi(0.5), 1.0);
    assert_eq!(chi(1.0), 1.0);
    assert_eq!(chi(2.0), 0.0);
    assert!((chi(1.5) - 0.5).abs() < 1e-15);
    let xs: Vec<f64> = (0..=100).map(|i| 1.0 + i as f64 / 100.0).collect();
    assert!(xs.windows(2).all(|w| chi(w[1]) <= chi(w[0])));
}

#[test]
fn matsubara_set_is_symmetric_and_sized() {
    let w = matsubara_frequencies(2.0, 4.0).unwrap();
    assert_eq!(w.len(), 8);
    for (a, b) in w.iter().zip(w.iter().rev()) {
        assert!((a + b).abs() < 1e-12);
    }
    assert!(matsubara_frequencies(1.0, 3.0).is_err());
}

#[test]
fn rejects_points_off_the_lattice_or_interval() {
    let p = ModelParams::default();
    let eval = CovarianceEvaluator::new(&p, C64::from(0.2)).unwrap();
    let ok = BandPoint::new(1, vec![0], 0.0);
    assert!(eval.covariance(&BandPoint::new(3, vec![0], 0.0), &ok).is_err());
    assert!(eval.covariance(&BandPoint::new(1, vec![0], p.beta), &ok).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn matsubara_sum_equals_closed_form((p, phi) in band_params(), mult in 1usize..=4, seed in any::<u64>()) {
        let eval = CovarianceEvaluator::new(&p, phi).unwrap();
        let h = 2.0 * mult as f64 / p.beta;
        let steps = 2 * mult;
        let pick = |s: u64| BandPoint::new(
            1 + (s % 2) as u8,
            vec![((s / 2) % p.l as u64) as i64],
            ((s / 7) % steps as u64) as f64 / h,
        );
        let (x, y) = (pick(seed), pick(seed.rotate_left(17)));
        let a = eval.covariance_matsubara(h, &x, &y).unwrap();
        let b = eval.covariance(&x, &y).unwrap();
        prop_assert!((a - b).norm() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn propagator_is_antiperiodic(beta in 0.2f64..4.0, t in 0.0f64..1.0, a in -3.0f64..3.0, frac in 0.01f64..0.99) {
        let theta = t * 2.0 * PI / beta;
        let tau = frac * beta;
        let fwd = level_propagator(beta, theta, a, tau, true);
        let back = level_propagator(beta, theta, a, tau - beta, false);
        prop_assert!((fwd + back).norm() <= 1e-12 * fwd.norm().max(1.0));
    }

    #[test]
    fn equal_time_forms_match_the_covariance((p, phi) in band_params(), x in 0i64..3) {
        let eval = CovarianceEvaluator::new(&p, phi).unwrap();
        let forms = eval.equal_time_forms(&[x], &[0]);
        for r in 1..=2u8 {
            for c in 1..=2u8 {
                let direct = eval.covariance(&BandPoint::new(r, vec![x], 0.0), &BandPoint::new(c, vec![0], 0.0)).unwrap();
                prop_assert!((forms[((r - 1) as usize, (c - 1) as usize)] - direct).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn determinant_bound_holds((p, phi) in band_params(), n in 1usize..=5, seed in any::<u64>()) {
        let r = determinant_bound_fuzz(&p, phi, n, 3, 50, seed).unwrap();
        prop_assert_eq!(r.violations, 0);
        prop_assert_eq!(r.gram_violations, 0);
    }
}
