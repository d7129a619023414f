use bcsif::grassmann::{
    exp_element, gaussian_integral, gaussian_integral_wick, log_element, log_moment_check, pfaffian, Covariance,
    GrassmannElement, MAX_GENERATORS,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn random_even(rng: &mut ChaCha8Rng, n: usize, density: f64) -> GrassmannElement {
    let mut f = GrassmannElement::zero(n).unwrap();
    for mask in 1u32..(1 << n) {
        if mask.count_ones() % 2 == 0 && rng.random::<f64>() < density {
            f.add_monomial(mask, C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
        }
    }
    f
}

#[test]
fn generators_anticommute_and_square_to_zero() {
    let n = 5;
    for i in 0..n {
        let gi = GrassmannElement::generator(n, i).unwrap();
        assert!(gi.wedge(&gi).unwrap().is_empty());
        for j in 0..n {
            let gj = GrassmannElement::generator(n, j).unwrap();
            let sum = gi.wedge(&gj).unwrap().add(&gj.wedge(&gi).unwrap()).unwrap();
            assert!(sum.is_empty());
        }
    }
}

#[test]
fn capacity_is_enforced() {
    assert!(GrassmannElement::zero(MAX_GENERATORS + 1).is_err());
    assert!(log_element(&GrassmannElement::constant(2, -1.0).unwrap()).is_err());
}

#[test]
fn product_of_pairs_integrates_to_det_of_identity_plus_td() {
    // ∫ Π_i (1 + t_i ψ̄_i ψ_i) dμ_D = det(I + T D).
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n0 in 1..=5 {
        let d = random_matrix(&mut rng, n0);
        let t: Vec<C64> = (0..n0).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.3)).collect();
        let mut f = GrassmannElement::one(2 * n0).unwrap();
        for (i, &ti) in t.iter().enumerate() {
            let pair = GrassmannElement::product_of(2 * n0, ti, &[i, n0 + i]).unwrap();
            f = f.wedge(&GrassmannElement::one(2 * n0).unwrap().add(&pair).unwrap()).unwrap();
        }
        let cov = Covariance { table: d.clone() };
        let tm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(t));
        let expect = (DMatrix::identity(n0, n0) + tm * d).determinant();
        assert!((gaussian_integral(&f, &cov).unwrap() - expect).norm() < 1e-12);
        assert!((gaussian_integral_wick(&f, &cov).unwrap() - expect).norm() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn pfaffian_squares_to_determinant(seed in any::<u64>(), half in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_matrix(&mut rng, 2 * half);
        let a = &m - m.transpose();
        let pf = pfaffian(a.clone());
        let det = a.determinant();
        prop_assert!((pf * pf - det).norm() <= 1e-10 * det.norm().max(1.0));
    }

    #[test]
    fn wick_route_equals_determinant_route(seed in any::<u64>(), n0 in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = Covariance { table: random_matrix(&mut rng, n0) };
        for mask in 0u32..(1 << (2 * n0)) {
            let a = cov.monomial_integral(mask);
            let b = cov.monomial_integral_wick(mask);
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn log_inverts_exp(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = random_even(&mut rng, n, 0.5);
        f.add_monomial(0, C64::new(0.3, -0.2));
        let back = log_element(&exp_element(&f).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn exp_is_a_homomorphism_on_even_elements(seed in any::<u64>(), n in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g) = (random_even(&mut rng, n, 0.4), random_even(&mut rng, n, 0.4));
        let lhs = exp_element(&f.add(&g).unwrap()).unwrap();
        let rhs = exp_element(&f).unwrap().wedge(&exp_element(&g).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn log_moments_agree_with_cumulants(seed in any::<u64>(), n0 in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = Covariance { table: random_matrix(&mut rng, n0) };
        let f = random_even(&mut rng, 2 * n0, 0.6);
        let r = log_moment_check(&f, &cov, 4).unwrap();
        prop_assert!(r.max_diff < 1e-10);
    }
}
