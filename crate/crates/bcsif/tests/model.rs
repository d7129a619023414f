use std::f64::consts::PI;

use bcsif::model::{coupling_window, ModelParams, MomentumGrid, Warning};
use bcsif::Error;
use proptest::prelude::*;

#[test]
fn rejects_invalid_parameters() {
    let ok = ModelParams::default();
    let cases = [
        ModelParams { beta: 0.0, ..ok.clone() },
        ModelParams { u: 0.0, ..ok.clone() },
        ModelParams { u: 0.5, ..ok.clone() },
        ModelParams { theta: 2.0 * PI, ..ok.clone() },
        ModelParams { theta: -0.1, ..ok.clone() },
        ModelParams { gamma: 1.5, ..ok.clone() },
        ModelParams { hop: 2, ..ok.clone() },
        ModelParams { l: 0, ..ok.clone() },
        ModelParams { xhat: Some(vec![1]), yhat: Some(vec![3]), ..ok.clone() },
        ModelParams { yhat: Some(vec![2]), ..ok.clone() },
        ModelParams { xhat: Some(vec![0, 0]), ..ok.clone() },
    ];
    for p in cases {
        assert!(matches!(p.validate(), Err(Error::Validation { .. })), "{p:?}");
    }
}

#[test]
fn degenerate_fermi_surface_is_a_warning() {
    let p = ModelParams { mu: 2.0, ..ModelParams::default() };
    assert_eq!(p.validate().unwrap(), vec![Warning::DegenerateFermiSurface]);
    assert!(ModelParams::default().validate().unwrap().is_empty());
}

#[test]
fn big_theta_is_distance_to_critical_field() {
    let p = ModelParams { beta: 2.0, theta: 0.5, ..ModelParams::default() };
    assert!((p.big_theta() - (PI / 2.0 - 0.25)).abs() < 1e-15);
}

#[test]
fn window_edges_match_their_formulas() {
    for (d, mu, beta, big_theta) in [(1usize, 0.0, 1.0, 0.01), (2, 0.5, 2.0, 0.2), (1, 1.5, 0.5, 0.9)] {
        let p = ModelParams { d, mu, beta, theta: 2.0 * PI / beta - 2.0 * big_theta, ..ModelParams::default() };
        let w = coupling_window(&p, 0.7, 1.3).unwrap();
        assert!((w.big_theta - big_theta).abs() < 1e-12);
        let gap = 2.0 * d as f64 - mu;
        let branch = if big_theta <= gap / 2.0 { 1.0 } else { big_theta / gap };
        let lower = 0.7 * gap.powi(1 - d as i32) * beta * big_theta * branch;
        assert!((w.lower - lower).abs() < 1e-12 * lower, "{} vs {lower}", w.lower);
        // Upper edge with the momentum integral evaluated by an independent midpoint rule.
        let n = 200_000;
        let integral: f64 = if d == 1 {
            (0..n)
                .map(|m| {
                    let e = 2.0 * (2.0 * PI * (m as f64 + 0.5) / n as f64).cos() - mu;
                    1.0 / (big_theta * big_theta + e * e).sqrt()
                })
                .sum::<f64>()
                / n as f64
        } else {
            continue;
        };
        let base = 1.0 + beta.powi(d as i32 + 3) + (1.0 + 1.0 / beta) * integral;
        let upper = 1.3 / (base * base);
        assert!((w.upper_integral - upper).abs() < 1e-6 * upper, "{} vs {upper}", w.upper_integral);
        assert_eq!(w.nonempty, w.lower < w.upper);
    }
}

#[test]
fn window_opens_only_near_the_critical_field() {
    let near_zero = ModelParams { beta: 1.0, theta: 1e-3, ..ModelParams::default() };
    assert!(!coupling_window(&near_zero, 1.0, 1.0).unwrap().nonempty);
    let critical = ModelParams { beta: 1.0, theta: 2.0 * PI - 2e-4, ..ModelParams::default() };
    assert!(coupling_window(&critical, 1.0, 1.0).unwrap().nonempty);
}

proptest! {
    #[test]
    fn momentum_grid_is_closed_under_reflection(d in 1usize..=3, l in 1usize..=7) {
        let g = MomentumGrid::new(d, l);
        prop_assert_eq!(g.len(), l.pow(d as u32));
        for i in 0..g.len() {
            let j = g.reflected_index(i);
            for (a, b) in g.points[i].iter().zip(&g.points[j]) {
                let s = (a + b) % (2.0 * PI);
                prop_assert!(s.abs() < 1e-12 || (s - 2.0 * PI).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn site_index_round_trips(d in 1usize..=3, l in 1usize..=6, seed in 0usize..1000) {
        let p = ModelParams { d, l, ..ModelParams::default() };
        let idx = seed % p.volume();
        prop_assert_eq!(p.site_index(&p.site_coords(idx)), idx);
        let shifted: Vec<i64> = p.site_coords(idx).iter().map(|c| c - 3 * l as i64).collect();
        prop_assert_eq!(p.site_index(&shifted), idx);
    }
}
