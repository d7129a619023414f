//! Model parameters, lattice and momentum grids, the free dispersion, the
//! magnitude function `g_d` and the coupling-window conditions.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics;

/// Physical and lattice parameters of the reduced BCS model with an
/// imaginary magnetic field `iθS_z`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelParams {
    /// Spatial dimension.
    pub d: usize,
    /// Linear lattice size; the lattice is `{0,…,L−1}^d` with periodic boundary.
    pub l: usize,
    /// Hopping sign selector, `e(k) = (−1)^hop · 2Σcos k_j − μ`.
    pub hop: u8,
    pub mu: f64,
    pub beta: f64,
    pub theta: f64,
    /// Coupling constant, strictly negative.
    pub u: f64,
    /// Symmetry-breaking field strength.
    pub gamma: f64,
    /// Site of the pairing operators `A_1`, `A_2`.
    pub xhat: Option<Vec<i64>>,
    /// Second site of the four-point operator `A_2`.
    pub yhat: Option<Vec<i64>>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { d: 1, l: 2, hop: 0, mu: 0.0, beta: 1.0, theta: 0.0, u: -1.0, gamma: 0.0, xhat: None, yhat: None }
    }
}

/// Non-fatal observations made during validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Warning {
    /// `|μ| ≥ 2d`: the Fermi surface is degenerate or empty.
    DegenerateFermiSurface,
}

impl ModelParams {
    /// Checks the hard invariants and returns the soft warnings.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        if self.d == 0 {
            return Err(Error::validation("d", "must be a positive integer"));
        }
        if self.l == 0 {
            return Err(Error::validation("L", "must be a positive integer"));
        }
        if self.hop > 1 {
            return Err(Error::validation("hop", "must be 0 or 1"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::validation("beta", "must be positive and finite"));
        }
        if !(self.u < 0.0) || !self.u.is_finite() {
            return Err(Error::validation("U", "must be negative and finite"));
        }
        if !self.mu.is_finite() || !self.gamma.is_finite() {
            return Err(Error::validation("mu", "mu and gamma must be finite"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::validation("gamma", "must lie in [0, 1]"));
        }
        if !(self.theta >= 0.0 && self.theta < 2.0 * PI / self.beta) {
            return Err(Error::validation("theta", format!("must lie in [0, 2π/β) = [0, {})", 2.0 * PI / self.beta)));
        }
        for (name, site) in [("xhat", &self.xhat), ("yhat", &self.yhat)] {
            if let Some(s) = site {
                if s.len() != self.d {
                    return Err(Error::validation(name, "must have d components"));
                }
            }
        }
        // An unset x̂ means the origin, so ŷ is compared against that.
        if let Some(y) = &self.yhat {
            if self.xhat_index() == self.site_index(y) {
                return Err(Error::validation("yhat", "xhat and yhat must differ modulo L"));
            }
        }
        let mut warnings = Vec::new();
        if self.mu.abs() >= 2.0 * self.d as f64 {
            warnings.push(Warning::DegenerateFermiSurface);
        }
        Ok(warnings)
    }

    /// `Θ = |θ/2 − π/β|`.
    pub fn big_theta(&self) -> f64 {
        (self.theta / 2.0 - PI / self.beta).abs()
    }

    /// `cos(βθ/2)`.
    pub fn cos_half(&self) -> f64 {
        (self.beta * self.theta / 2.0).cos()
    }

    pub fn abs_u(&self) -> f64 {
        self.u.abs()
    }

    /// Number of lattice sites `L^d`.
    pub fn volume(&self) -> usize {
        self.l.pow(self.d as u32)
    }

    /// Index of the periodized site `r_L(x)` in the site-major enumeration.
    pub fn site_index(&self, x: &[i64]) -> usize {
        let l = self.l as i64;
        x.iter().rev().fold(0usize, |acc, &c| acc * self.l + c.rem_euclid(l) as usize)
    }

    /// Coordinates of site `idx`; component `j` varies fastest for `j = 0`.
    pub fn site_coords(&self, idx: usize) -> Vec<i64> {
        let mut rest = idx;
        (0..self.d)
            .map(|_| {
                let c = rest % self.l;
                rest /= self.l;
                c as i64
            })
            .collect()
    }

    /// Index of the neighbour `x ± e_j`.
    pub fn neighbour(&self, idx: usize, j: usize, forward: bool) -> usize {
        let mut x = self.site_coords(idx);
        x[j] += if forward { 1 } else { -1 };
        self.site_index(&x)
    }

    pub fn momentum_grid(&self) -> MomentumGrid {
        MomentumGrid::new(self.d, self.l)
    }

    /// `r_L(x̂)` if set, else the origin.
    pub fn xhat_index(&self) -> usize {
        self.xhat.as_ref().map_or(0, |x| self.site_index(x))
    }

    /// `r_L(ŷ)` if set.
    pub fn yhat_index(&self) -> Option<usize> {
        self.yhat.as_ref().map(|y| self.site_index(y))
    }
}

/// The momentum lattice `Γ* = (2π/L){0,…,L−1}^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    pub d: usize,
    pub l: usize,
    pub points: Vec<Vec<f64>>,
}

impl MomentumGrid {
    pub fn new(d: usize, l: usize) -> Self {
        let n = l.pow(d as u32);
        let points = (0..n)
            .map(|mut idx| {
                (0..d)
                    .map(|_| {
                        let m = idx % l;
                        idx /= l;
                        2.0 * PI * m as f64 / l as f64
                    })
                    .collect()
            })
            .collect();
        MomentumGrid { d, l, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of `(2π − k) mod 2π`.
    pub fn reflected_index(&self, idx: usize) -> usize {
        let mut rest = idx;
        let mut out = 0;
        let mut stride = 1;
        for _ in 0..self.d {
            let m = rest % self.l;
            rest /= self.l;
            out += ((self.l - m) % self.l) * stride;
            stride *= self.l;
        }
        out
    }
}

/// Free dispersion `e(k) = (−1)^hop · 2Σ_j cos k_j − μ`.
pub fn dispersion(params: &ModelParams, k: &[f64]) -> f64 {
    let sign = if params.hop == 0 { 1.0 } else { -1.0 };
    sign * 2.0 * k.iter().map(|kj| kj.cos()).sum::<f64>() - params.mu
}

/// Dispersion values on the momentum lattice, in grid order.
pub fn lattice_dispersions(params: &ModelParams) -> Vec<f64> {
    params.momentum_grid().points.iter().map(|k| dispersion(params, k)).collect()
}

/// Magnitude function
/// `g_d(x) = 1_{d≥2} (log(1/x+1))^{d/(d+1)} x^{−1/(d+1)} + 1_{d=1} (4−μ²)^{−1/2} log(1/x+1)`.
pub fn g_function(params: &ModelParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("g_d requires x > 0, got {x}")));
    }
    let log_term = (1.0 / x).ln_1p();
    if params.d == 1 {
        let m2 = params.mu * params.mu;
        if m2 >= 4.0 {
            return Err(Error::Domain(format!("g_1 requires μ² < 4, got μ = {}", params.mu)));
        }
        Ok(log_term / (4.0 - m2).sqrt())
    } else {
        let d = params.d as f64;
        Ok(log_term.powf(d / (d + 1.0)) * x.powf(-1.0 / (d + 1.0)))
    }
}

/// Lower and upper coupling bounds of the superconducting window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    pub big_theta: f64,
    pub lower: f64,
    /// Upper bound built from `g_d(Θ)`.
    pub upper: f64,
    pub nonempty: bool,
    /// Upper bound with `g_d(Θ)` replaced by `(2π)^{−d}∫dk (Θ²+e(k)²)^{−1/2}`.
    pub upper_integral: f64,
    pub nonempty_integral: bool,
}

/// Evaluates both sides of the window condition
/// `c1 (2d−|μ|)^{1−d} β Θ (…) < |U| < c2 (1 + β^{d+3} + (1+β^{−1}) g_d(Θ))^{−2}`.
pub fn coupling_window(params: &ModelParams, c1: f64, c2: f64) -> Result<WindowReport> {
    let theta_big = params.big_theta();
    if !(theta_big > 0.0) {
        return Err(Error::Domain("coupling window requires Θ > 0".into()));
    }
    let d = params.d as f64;
    let gap = 2.0 * d - params.mu.abs();
    let branch = if theta_big <= 0.5 * gap { 1.0 } else { theta_big / gap };
    let lower = c1 * gap.powf(1.0 - d) * params.beta * theta_big * branch;
    let upper_of = |g: f64| {
        let base = 1.0 + params.beta.powf(d + 3.0) + (1.0 + 1.0 / params.beta) * g;
        c2 / (base * base)
    };
    let upper = upper_of(g_function(params, theta_big)?);
    let nodes = numerics::auto_nodes(params.d, theta_big, 0);
    let integral = numerics::torus_mean(params.d, nodes, |k| {
        let e = dispersion(params, k);
        1.0 / (theta_big * theta_big + e * e).sqrt()
    });
    let upper_integral = upper_of(integral);
    Ok(WindowReport {
        big_theta: theta_big,
        lower,
        upper,
        nonempty: lower < upper,
        upper_integral,
        nonempty_integral: lower < upper_integral,
    })
}

/// Lower bound `1_{d=1} + 1_{d≥2} ((2d−|μ|)/(10(d−1)d))^{d−1}` on the
/// `(d−1)`-dimensional measure of every level set `{e(k) = η}`, `|η| ≤ ½(2d−|μ|)`.
pub fn fermi_surface_lower_bound(params: &ModelParams) -> Result<f64> {
    let d = params.d as f64;
    if params.mu.abs() >= 2.0 * d {
        return Err(Error::Domain(format!("Fermi-surface bound requires |μ| < 2d, got μ = {}", params.mu)));
    }
    if params.d == 1 {
        Ok(1.0)
    } else {
        Ok(((2.0 * d - params.mu.abs()) / (10.0 * (d - 1.0) * d)).powf(d - 1.0))
    }
}

/// Numerical `H^{d−1}` measure of `{k ∈ [0,2π)^d : e(k) = η}` on an `n^d` mesh.
///
/// For `d = 1` this counts sign changes (the counting measure); for `d = 2` it
/// sums marching-squares segment lengths. Other dimensions are not supported.
pub fn level_set_measure(params: &ModelParams, eta: f64, n: usize) -> Result<f64> {
    let h = 2.0 * PI / n as f64;
    let f = |i: usize, j: usize| -> f64 {
        let k = [h * (i % n) as f64, h * (j % n) as f64];
        dispersion(params, &k[..params.d]) - eta
    };
    match params.d {
        1 => {
            let count = (0..n)
                .filter(|&i| {
                    let (a, b) = (f(i, 0), f(i + 1, 0));
                    (a <= 0.0 && b > 0.0) || (a > 0.0 && b <= 0.0)
                })
                .count();
            Ok(count as f64)
        }
        2 => {
            let mut total = 0.0;
            for i in 0..n {
                for j in 0..n {
                    total += marching_square_length([f(i, j), f(i + 1, j), f(i + 1, j + 1), f(i, j + 1)], h);
                }
            }
            Ok(total)
        }
        _ => Err(Error::Domain("level-set measure is implemented for d ≤ 2".into())),
    }
}

/// Length of the zero contour inside one square cell with corner values
/// ordered counter-clockwise from the lower-left corner.
fn marching_square_length(v: [f64; 4], h: f64) -> f64 {
    let corners = [(0.0, 0.0), (h, 0.0), (h, h), (0.0, h)];
    let mut pts = Vec::with_capacity(4);
    for e in 0..4 {
        let (a, b) = (v[e], v[(e + 1) % 4]);
        if (a <= 0.0) != (b <= 0.0) {
            let t = a / (a - b);
            let (p, q) = (corners[e], corners[(e + 1) % 4]);
            pts.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    let seg = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    match pts.len() {
        2 => seg(pts[0], pts[1]),
        // Saddle cell: pair the crossings along the consistent diagonal.
        4 => seg(pts[0], pts[1]) + seg(pts[2], pts[3]),
        _ => 0.0,
    }
}

/// `[(1/L^d) Σ_{k∈Γ*} (K² + e(k)²)^{−1/2}] / g_d(K)`.
pub fn momentum_sum_ratio(params: &ModelParams, k_cut: f64) -> Result<f64> {
    if !(k_cut > 0.0) {
        return Err(Error::Domain("momentum-sum ratio requires K > 0".into()));
    }
    let es = lattice_dispersions(params);
    let mean = es.iter().map(|e| 1.0 / (k_cut * k_cut + e * e).sqrt()).sum::<f64>() / es.len() as f64;
    Ok(mean / g_function(params, k_cut)?)
}

/// Which of the coupling-window conditions a parameter point satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionLedger {
    pub theta_admissible: bool,
    pub nondegenerate_fermi_surface: bool,
    /// `θ ≥ π/β`: the half field is past the first Matsubara frequency.
    pub theta_above_half: bool,
    /// `|U|` below the upper bound (positivity of the partition function).
    pub below_upper: bool,
    /// Inside the superconducting window.
    pub in_window: bool,
    /// `θ < π/β` and below the upper bound: no solution of the gap equation.
    pub no_superconductivity: bool,
    pub window: WindowReport,
}

pub fn condition_ledger(params: &ModelParams, c1: f64, c2: f64) -> Result<ConditionLedger> {
    let window = coupling_window(params, c1, c2)?;
    let abs_u = params.abs_u();
    let theta_above_half = params.theta >= PI / params.beta;
    let below_upper = abs_u < window.upper;
    Ok(ConditionLedger {
        theta_admissible: params.theta >= 0.0 && params.theta < 2.0 * PI / params.beta,
        nondegenerate_fermi_surface: params.mu.abs() < 2.0 * params.d as f64,
        theta_above_half,
        below_upper,
        in_window: window.lower < abs_u && below_upper,
        no_superconductivity: !theta_above_half && below_upper,
        window,
    })
}
