//! Effective potentials of the auxiliary-field integrals: `F`, `F_L` (with
//! symmetry-breaking field γ) and their radial restrictions `f`, `f_L`,
//! together with derivatives, maximizers and leading-order Laplace predictions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gap::{self, bracket_upper, log_c_cosh, pair_kernel, pair_kernel_derivative_over_e};
use crate::model::{dispersion, lattice_dispersions, ModelParams};
use crate::numerics::{self, brent};

/// Momentum average used by a potential: the continuum `(2π)^{−d}∫dk` by
/// quadrature or the finite-volume `L^{−d}Σ_{k∈Γ*}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Measure {
    Continuum { nodes: usize },
    Lattice,
}

impl Measure {
    /// Mean of `f(e(k))` under this measure.
    pub fn mean(&self, params: &ModelParams, f: impl Fn(f64) -> f64 + Sync) -> f64 {
        match *self {
            Measure::Continuum { nodes } => {
                let n = gap::effective_nodes(params, nodes);
                numerics::torus_mean(params.d, n, |k| f(dispersion(params, k)))
            }
            Measure::Lattice => {
                let es = lattice_dispersions(params);
                es.iter().map(|&e| f(e)).sum::<f64>() / es.len() as f64
            }
        }
    }
}

/// `I(r) = ⟨q(√(e²+r²))⟩`.
fn kernel_mean(params: &ModelParams, measure: Measure, r: f64) -> f64 {
    let c = params.cos_half();
    measure.mean(params, |e| pair_kernel(params.beta, c, (e * e + r * r).sqrt()))
}

/// `J(r) = ⟨q′(E)/E⟩`.
fn kernel_derivative_mean(params: &ModelParams, measure: Measure, r: f64) -> f64 {
    let c = params.cos_half();
    measure.mean(params, |e| pair_kernel_derivative_over_e(params.beta, c, (e * e + r * r).sqrt()))
}

/// `(1/β)⟨log(c+cosh β√(e²+r²)) − log(c+cosh βe)⟩`.
fn log_mean(params: &ModelParams, measure: Measure, r: f64) -> f64 {
    let (beta, c) = (params.beta, params.cos_half());
    measure.mean(params, |e| log_c_cosh(c, beta * (e * e + r * r).sqrt()) - log_c_cosh(c, beta * e)) / beta
}

/// `F(x) = −((x₁−γ)²+x₂²)/|U| + (1/β)⟨log(c+cosh β√(e²+|x|²)) − log(c+cosh βe)⟩`.
pub fn eval_potential(params: &ModelParams, measure: Measure, x: [f64; 2]) -> f64 {
    let quad = ((x[0] - params.gamma).powi(2) + x[1] * x[1]) / params.abs_u();
    -quad + log_mean(params, measure, x[0].hypot(x[1]))
}

/// `F` with quadrature on `nodes` per axis.
pub fn eval_f(params: &ModelParams, x: [f64; 2], nodes: usize) -> f64 {
    eval_potential(params, Measure::Continuum { nodes }, x)
}

/// Finite-volume `F_L`.
pub fn eval_f_l(params: &ModelParams, x: [f64; 2]) -> f64 {
    eval_potential(params, Measure::Lattice, x)
}

/// Radial potential `f(x) = −x²/|U| + (1/β)⟨…⟩` (no symmetry-breaking field).
pub fn eval_radial(params: &ModelParams, measure: Measure, x: f64) -> f64 {
    -x * x / params.abs_u() + log_mean(params, measure, x.abs())
}

/// Closed-form gradient and Hessian of `F`:
/// `∂ᵢF = −2(xᵢ−γδᵢ₁)/|U| + xᵢI(|x|)`,
/// `∂ᵢ∂ⱼF = (−2/|U| + I(|x|))δᵢⱼ + xᵢxⱼJ(|x|)`.
pub fn grad_hess(params: &ModelParams, measure: Measure, x: [f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    let r = x[0].hypot(x[1]);
    let abs_u = params.abs_u();
    let i = kernel_mean(params, measure, r);
    let j = kernel_derivative_mean(params, measure, r);
    let grad = [-2.0 * (x[0] - params.gamma) / abs_u + x[0] * i, -2.0 * x[1] / abs_u + x[1] * i];
    let diag = -2.0 / abs_u + i;
    let hess = [[diag + x[0] * x[0] * j, x[0] * x[1] * j], [x[0] * x[1] * j, diag + x[1] * x[1] * j]];
    (grad, hess)
}

/// Maximizer `(a, 0)` of the potential with `γ > 0`: the root of
/// `a(−2/|U| + I(a)) + 2γ/|U| = 0` on the positive `x₁`-axis.
pub fn maximize_potential(params: &ModelParams, measure: Measure, tol: f64) -> Result<f64> {
    if !(params.gamma > 0.0) {
        return Err(Error::validation("gamma", "maximizer of F requires γ > 0"));
    }
    let abs_u = params.abs_u();
    let g = |a: f64| a * (-2.0 / abs_u + kernel_mean(params, measure, a)) + 2.0 * params.gamma / abs_u;
    let hi = bracket_upper(params.gamma.max(1.0), |x| g(x) < 0.0)?;
    Ok(brent(g, 0.0, hi, tol, gap::MAX_ITER)?.x)
}

/// Maximizer of the radial potential: the positive root of `−2/|U| + I(x) = 0`
/// if `−2/|U| + I(0) > 0`, else `0`.
pub fn maximize_radial(params: &ModelParams, measure: Measure, tol: f64) -> Result<f64> {
    let abs_u = params.abs_u();
    let g = |x: f64| -2.0 / abs_u + kernel_mean(params, measure, x);
    if g(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let hi = bracket_upper(1.0, |x| g(x) < 0.0)?;
    Ok(brent(g, 0.0, hi, tol, gap::MAX_ITER)?.x)
}

/// `a_L(γ)`.
pub fn maximize_f_l_gamma(params: &ModelParams, tol: f64) -> Result<f64> {
    maximize_potential(params, Measure::Lattice, tol)
}

/// `Δ_L`.
pub fn maximize_f_l(params: &ModelParams, tol: f64) -> Result<f64> {
    maximize_radial(params, Measure::Lattice, tol)
}

/// Value, derivatives and maximizer of `F` (or `F_L`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialReport {
    pub measure: Measure,
    pub maximizer: [f64; 2],
    pub value: f64,
    pub gradient: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    /// `∂²F/∂x₂²` at the maximizer; equals `−2γ/(|U|a)`.
    pub second_derivative_at_max: f64,
}

pub fn potential_report(params: &ModelParams, measure: Measure, tol: f64) -> Result<PotentialReport> {
    params.validate()?;
    let a = maximize_potential(params, measure, tol)?;
    let x = [a, 0.0];
    let (gradient, hessian) = grad_hess(params, measure, x);
    Ok(PotentialReport {
        measure,
        maximizer: x,
        value: eval_potential(params, measure, x),
        gradient,
        hessian,
        second_derivative_at_max: hessian[1][1],
    })
}

/// Leading-order Laplace predictions for the finite-volume order parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacePrediction {
    pub a_gamma: f64,
    pub delta: f64,
    /// `−(a(γ)−γ)/|U|`.
    pub ssb_pred: f64,
    /// `Δ²/U²`.
    pub odlro_pred: f64,
}

pub fn laplace_prediction(params: &ModelParams, tol: f64, nodes: usize) -> Result<LaplacePrediction> {
    let sol = gap::solve_gap(params, tol, nodes)?;
    let a = gap::a_of_gamma(params, tol, nodes)?;
    Ok(LaplacePrediction {
        a_gamma: a,
        delta: sol.delta,
        ssb_pred: -(a - params.gamma) / params.abs_u(),
        odlro_pred: sol.odlro,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_at_origin_is_minus_gamma_squared_over_u() {
        let p = ModelParams { gamma: 0.3, ..ModelParams::default() };
        let v = eval_f_l(&p, [0.0, 0.0]);
        assert!((v + 0.09).abs() < 1e-15);
    }

    #[test]
    fn lattice_and_continuum_maximizers_agree_with_gap_module() {
        let p = ModelParams { u: -3.0, beta: 4.0, gamma: 0.2, l: 256, ..ModelParams::default() };
        let a = maximize_potential(&p, Measure::Continuum { nodes: 512 }, 1e-12).unwrap();
        let a_gap = gap::a_of_gamma(&p, 1e-12, 512).unwrap();
        assert!((a - a_gap).abs() < 1e-10);
    }
}
