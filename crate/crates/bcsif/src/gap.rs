//! The modified gap equation
//! `−2/|U| + (2π)^{−d}∫dk sinh(βE)/((cos(βθ/2)+cosh(βE))E) = 0`, `E = √(e(k)²+Δ²)`,
//! its solver, the free-energy density and the maximizer `a(γ)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dispersion, ModelParams};
use crate::numerics::{self, brent};

/// Iteration cap for all root searches in this module.
pub const MAX_ITER: usize = 200;
/// Largest bracket end tried before giving up.
pub const BRACKET_LIMIT: f64 = 1e12;

/// `r(x) = sinh x / (c + cosh x)` for `x ≥ 0`, overflow-free.
pub fn sinh_ratio(c: f64, x: f64) -> f64 {
    debug_assert!(c > -1.0 || x > 0.0, "c + cosh x must stay positive");
    if x > 30.0 {
        let y = (-x).exp();
        (1.0 - y * y) / (2.0 * c * y + 1.0 + y * y)
    } else {
        x.sinh() / (c + x.cosh())
    }
}

/// `log(c + cosh x)` for `x ≥ 0`, overflow-free.
pub fn log_c_cosh(c: f64, x: f64) -> f64 {
    let x = x.abs();
    if x > 30.0 {
        let y = (-x).exp();
        x - std::f64::consts::LN_2 + (2.0 * c * y + y * y).ln_1p()
    } else {
        (c + x.cosh()).ln()
    }
}

/// Gap kernel `q(E) = sinh(βE)/((c+cosh βE)E)`, with the removable limit
/// `β/(c+1)` at `βE < 10⁻⁸`.
pub fn pair_kernel(beta: f64, c: f64, e_full: f64) -> f64 {
    let x = beta * e_full.abs();
    if x < 1e-8 {
        beta / (c + 1.0)
    } else {
        beta * sinh_ratio(c, x) / x
    }
}

/// `q′(E)/E`, the radial factor of the Hessian of the effective potential.
pub fn pair_kernel_derivative_over_e(beta: f64, c: f64, e_full: f64) -> f64 {
    let x = beta * e_full.abs();
    let b3 = beta * beta * beta;
    if x < 1e-4 {
        // q(E) = β s(βE), s(x) = s₀ + s₂x² + O(x⁴).
        let s2 = (1.0 / 6.0 - 0.5 / (1.0 + c)) / (1.0 + c);
        return b3 * 2.0 * s2;
    }
    // (c cosh x + 1)/(c + cosh x)², in a form that survives large x.
    let num_over_den = if x > 30.0 {
        let y = (-x).exp();
        let den = 1.0 + 2.0 * c * y + y * y;
        2.0 * y * (c * (1.0 + y * y) + 2.0 * y) / (den * den)
    } else {
        let ch = x.cosh();
        (c * ch + 1.0) / ((c + ch) * (c + ch))
    };
    let s = sinh_ratio(c, x) / x;
    b3 * (num_over_den / x - s / x) / x
}

/// `(2π)^{−d}∫dk q(√(e(k)²+r²))`.
pub fn gap_integral(params: &ModelParams, r: f64, nodes: usize) -> f64 {
    let c = params.cos_half();
    numerics::torus_mean(params.d, nodes, |k| {
        let e = dispersion(params, k);
        pair_kernel(params.beta, c, (e * e + r * r).sqrt())
    })
}

/// Node count actually used for a request of `nodes`.
pub fn effective_nodes(params: &ModelParams, nodes: usize) -> usize {
    numerics::auto_nodes(params.d, params.big_theta(), nodes)
}

/// Left-hand side `D(Δ)` of the gap equation.
pub fn gap_residual(params: &ModelParams, delta: f64, nodes: usize) -> f64 {
    -2.0 / params.abs_u() + gap_integral(params, delta, effective_nodes(params, nodes))
}

/// `D(0)`: positive iff the gap equation has a solution `Δ > 0`.
pub fn solvability_indicator(params: &ModelParams, nodes: usize) -> f64 {
    gap_residual(params, 0.0, nodes)
}

/// Solved gap together with the derived order parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapSolution {
    pub delta: f64,
    pub residual: f64,
    pub solvable: bool,
    pub iterations: usize,
    pub quad_nodes: usize,
    /// `−Δ/|U|`.
    pub ssb: f64,
    /// `Δ²/U²`.
    pub odlro: f64,
    pub free_energy: f64,
}

/// Solves `D(Δ) = 0` to `|D| ≤ tol`, or returns `Δ = 0` when `D(0) ≤ 0`.
pub fn solve_gap(params: &ModelParams, tol: f64, nodes: usize) -> Result<GapSolution> {
    if !(tol > 0.0) {
        return Err(Error::validation("tol", "must be positive"));
    }
    params.validate()?;
    let n = effective_nodes(params, nodes);
    let residual = |delta: f64| -2.0 / params.abs_u() + gap_integral(params, delta, n);
    let indicator = residual(0.0);
    let (delta, res, iterations) = if indicator <= 0.0 {
        (0.0, indicator, 0)
    } else {
        let hi = bracket_upper(1.0, |x| residual(x) < 0.0)?;
        let root = brent(residual, 0.0, hi, tol, MAX_ITER)?;
        if root.fx.abs() > tol {
            return Err(Error::Numerical(format!(
                "gap residual {:.3e} above tolerance {tol:e} at machine-precision bracket",
                root.fx
            )));
        }
        (root.x, root.fx, root.iterations)
    };
    let ssb = -delta / params.abs_u();
    Ok(GapSolution {
        delta,
        residual: res,
        solvable: delta > 0.0,
        iterations,
        quad_nodes: n,
        ssb,
        odlro: ssb * ssb,
        free_energy: free_energy_density_n(params, delta, n),
    })
}

/// Doubles `hi` until `done(hi)`; fails past [`BRACKET_LIMIT`].
pub(crate) fn bracket_upper(mut hi: f64, done: impl Fn(f64) -> bool) -> Result<f64> {
    while !done(hi) {
        hi *= 2.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::Numerical(format!("failed to bracket a root below {BRACKET_LIMIT}")));
        }
    }
    Ok(hi)
}

/// `Δ²/|U| − (β(2π)^d)^{−1}∫dk log(2e^{−βe}(cos(βθ/2) + cosh βE))`.
pub fn free_energy_density(params: &ModelParams, delta: f64, nodes: usize) -> Result<f64> {
    params.validate()?;
    Ok(free_energy_density_n(params, delta, effective_nodes(params, nodes)))
}

fn free_energy_density_n(params: &ModelParams, delta: f64, n: usize) -> f64 {
    let (beta, c) = (params.beta, params.cos_half());
    let mean = numerics::torus_mean(params.d, n, |k| {
        let e = dispersion(params, k);
        let big_e = (e * e + delta * delta).sqrt();
        -beta * e + std::f64::consts::LN_2 + log_c_cosh(c, beta * big_e)
    });
    delta * delta / params.abs_u() - mean / beta
}

/// Unique root `a > Δ` of `a(−2/|U| + I(a)) = −2γ/|U|`.
pub fn a_of_gamma(params: &ModelParams, tol: f64, nodes: usize) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(Error::validation("gamma", "a(γ) requires γ > 0"));
    }
    let sol = solve_gap(params, tol, nodes)?;
    let n = sol.quad_nodes;
    let abs_u = params.abs_u();
    let g = |a: f64| a * (-2.0 / abs_u + gap_integral(params, a, n)) + 2.0 * params.gamma / abs_u;
    let lo = if g(sol.delta) > 0.0 { sol.delta } else { 0.0 };
    let hi = bracket_upper((2.0 * lo).max(params.gamma).max(1.0), |x| g(x) < 0.0)?;
    Ok(brent(g, lo, hi, tol, MAX_ITER)?.x)
}

/// Whether `x ↦ sinh x/(x(ε + cosh x))` is strictly decreasing on the grid
/// `{50 i/samples : i = 1,…,samples}`.
pub fn monotonicity_check(epsilon: f64, samples: usize) -> Result<bool> {
    if !(epsilon > -1.0 && epsilon <= 1.0) {
        return Err(Error::validation("epsilon", "must lie in (−1, 1]"));
    }
    if samples < 2 {
        return Err(Error::validation("samples", "need at least 2"));
    }
    let f = |x: f64| pair_kernel(1.0, epsilon, x);
    let values: Vec<f64> = (1..=samples).map(|i| f(50.0 * i as f64 / samples as f64)).collect();
    Ok(values.windows(2).all(|w| w[1] < w[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_limit_at_zero() {
        assert_eq!(pair_kernel(1.0, 1.0, 0.0), 0.5);
        assert!((pair_kernel(1.0, 1.0, 1e-6) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn stable_branches_agree_at_switch() {
        for c in [-0.9, 0.0, 0.7, 1.0] {
            let x: f64 = 30.0;
            let direct = x.sinh() / (c + x.cosh());
            assert!((sinh_ratio(c, x + 1e-12) - direct).abs() < 1e-14);
            assert!((log_c_cosh(c, 30.0 + 1e-12) - (c + x.cosh()).ln()).abs() < 1e-11);
        }
    }

    #[test]
    fn kernel_derivative_matches_difference_quotient() {
        for (beta, c) in [(1.0, 1.0), (2.0, -0.5), (0.5, 0.3)] {
            for e in [1e-3f64, 0.1, 0.7, 3.0, 40.0] {
                let h = 1e-5 * e.max(0.1);
                let fd = (pair_kernel(beta, c, e + h) - pair_kernel(beta, c, e - h)) / (2.0 * h) / e;
                let an = pair_kernel_derivative_over_e(beta, c, e);
                assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-8), "{beta} {c} {e}: {fd} {an}");
            }
        }
    }

    #[test]
    fn residual_at_infinite_gap() {
        let p = ModelParams::default();
        assert!((gap_residual(&p, 1e6, 64) + 2.0).abs() < 1e-5);
    }
}
