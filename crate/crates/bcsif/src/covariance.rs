//! The two-band free covariance `C(φ)`: closed form via the diagonalizing
//! unitary, the finite Matsubara sum, equal-time closed forms, the smooth
//! scale decomposition `Σ_l C_l`, decay norms and sampled determinant bounds.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{dispersion, ModelParams};

/// A point `(ρ, x, s)` of `{1,2} × Z^d × [0,β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPoint {
    pub band: u8,
    pub x: Vec<i64>,
    pub s: f64,
}

impl BandPoint {
    pub fn new(band: u8, x: Vec<i64>, s: f64) -> Self {
        BandPoint { band, x, s }
    }
}

/// Per-momentum data: `E(φ)(k) = [[e, φ̄], [φ, −e]]`, its positive eigenvalue
/// `e(φ)(k)` and the unitary `U(φ)(k)` with `U*EU = diag(e(φ), −e(φ))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandBlock {
    pub k: Vec<f64>,
    pub e: f64,
    pub e_matrix: Matrix2<C64>,
    pub e_full: f64,
    pub u_matrix: Matrix2<C64>,
}

impl BandBlock {
    pub fn new(params: &ModelParams, phi: C64, k: Vec<f64>) -> Self {
        let e = dispersion(params, &k);
        let e_matrix = Matrix2::new(C64::from(e), phi.conj(), phi, C64::from(-e));
        if phi == C64::from(0.0) {
            return BandBlock { k, e, e_matrix, e_full: e, u_matrix: Matrix2::identity() };
        }
        let abs2 = phi.norm_sqr();
        let e_full = (e * e + abs2).sqrt();
        // E∓e without cancellation.
        let (minus, plus) =
            if e >= 0.0 { (abs2 / (e_full + e), e_full + e) } else { (e_full - e, abs2 / (e_full - e)) };
        let nx = (abs2 + minus * minus).sqrt();
        let ny = (abs2 + plus * plus).sqrt();
        let u_matrix = Matrix2::new(phi.conj() / nx, -phi.conj() / ny, C64::from(minus / nx), C64::from(plus / ny));
        BandBlock { k, e, e_matrix, e_full, u_matrix }
    }

    /// `U diag(f(e(φ)), f(−e(φ))) U*`.
    pub fn spectral(&self, f: impl Fn(f64) -> C64) -> Matrix2<C64> {
        let d = Matrix2::new(f(self.e_full), C64::from(0.0), C64::from(0.0), f(-self.e_full));
        self.u_matrix * d * self.u_matrix.adjoint()
    }
}

/// Time-ordered scalar propagator of a single level `z = iθ/2 + a`:
/// `e^{τz}/(1+e^{βz})` for `s ≥ t`, `−e^{τz}/(1+e^{−βz})` for `s < t`, `τ = s−t`.
pub fn level_propagator(beta: f64, theta: f64, a: f64, tau: f64, s_ge_t: bool) -> C64 {
    let z = C64::new(a, theta / 2.0);
    let one = C64::from(1.0);
    if s_ge_t {
        if a > 0.0 {
            ((tau - beta) * z).exp() / ((-beta * z).exp() + one)
        } else {
            (tau * z).exp() / (one + (beta * z).exp())
        }
    } else if a < 0.0 {
        -((tau + beta) * z).exp() / ((beta * z).exp() + one)
    } else {
        -(tau * z).exp() / (one + (-beta * z).exp())
    }
}

/// The finite set `M_h = {(π/β)(2n+1) : |ω| < πh}`.
pub fn matsubara_frequencies(beta: f64, h: f64) -> Result<Vec<f64>> {
    let count = check_h(beta, h)?;
    let half = (count / 2) as i64;
    Ok((-half..half).map(|n| PI / beta * (2 * n + 1) as f64).collect())
}

/// Validates `h ∈ (2/β)N` and returns `βh`.
pub(crate) fn check_h(beta: f64, h: f64) -> Result<usize> {
    let bh = beta * h;
    let half = (bh / 2.0).round();
    if !(half >= 1.0) || (bh / 2.0 - half).abs() > 1e-9 {
        return Err(Error::validation("h", format!("βh = {bh} must be a positive even integer")));
    }
    Ok(2 * half as usize)
}

/// `h⁻¹(1 − e^{−iω/h + A/h})⁻¹`.
pub fn matsubara_resolvent(h: f64, omega: f64, a: C64) -> C64 {
    let one = C64::from(1.0);
    one / (h * (one - (C64::new(0.0, -omega / h) + a / h).exp()))
}

/// Momentum-block cache for `C(φ)` at fixed parameters and field.
#[derive(Debug, Clone)]
pub struct CovarianceEvaluator {
    pub params: ModelParams,
    pub phi: C64,
    pub blocks: Vec<BandBlock>,
}

impl CovarianceEvaluator {
    pub fn new(params: &ModelParams, phi: C64) -> Result<Self> {
        params.validate()?;
        let blocks = params.momentum_grid().points.into_iter().map(|k| BandBlock::new(params, phi, k)).collect();
        Ok(CovarianceEvaluator { params: params.clone(), phi, blocks })
    }

    fn check_point(&self, p: &BandPoint) -> Result<()> {
        if p.band != 1 && p.band != 2 {
            return Err(Error::validation("band", "must be 1 or 2"));
        }
        if p.x.len() != self.params.d {
            return Err(Error::validation("x", "must have d components"));
        }
        if !(p.s >= 0.0 && p.s < self.params.beta) {
            return Err(Error::validation("s", "time must lie in [0, β)"));
        }
        Ok(())
    }

    fn phase(&self, k: &[f64], x: &[i64], y: &[i64]) -> C64 {
        let arg: f64 = k.iter().zip(x.iter().zip(y)).map(|(kj, (xj, yj))| kj * (xj - yj) as f64).sum();
        C64::from_polar(1.0, arg)
    }

    /// Closed-form `C(φ)(X, Y)`.
    pub fn covariance(&self, x: &BandPoint, y: &BandPoint) -> Result<C64> {
        self.check_point(x)?;
        self.check_point(y)?;
        let (beta, theta) = (self.params.beta, self.params.theta);
        let tau = x.s - y.s;
        let ge = x.s >= y.s;
        let (r, c) = ((x.band - 1) as usize, (y.band - 1) as usize);
        let sum: C64 = self
            .blocks
            .iter()
            .map(|b| {
                let m = b.spectral(|a| level_propagator(beta, theta, a, tau, ge));
                self.phase(&b.k, &x.x, &y.x) * m[(r, c)]
            })
            .sum();
        Ok(sum / self.blocks.len() as f64)
    }

    /// `C(φ)(X, Y)` as `(1/(βL^d)) Σ_k Σ_{ω∈M_h} e^{ik(x−y)+iω(s−t)} h⁻¹(I − e^{−(i/h)(ω−θ/2) + E/h})⁻¹`.
    pub fn covariance_matsubara(&self, h: f64, x: &BandPoint, y: &BandPoint) -> Result<C64> {
        self.check_point(x)?;
        self.check_point(y)?;
        on_grid(x.s, h)?;
        on_grid(y.s, h)?;
        let freqs = matsubara_frequencies(self.params.beta, h)?;
        let half_theta = C64::new(0.0, self.params.theta / 2.0);
        let tau = x.s - y.s;
        let (r, c) = ((x.band - 1) as usize, (y.band - 1) as usize);
        let mut sum = C64::from(0.0);
        for b in &self.blocks {
            let phase = self.phase(&b.k, &x.x, &y.x);
            for &w in &freqs {
                let m = b.spectral(|a| matsubara_resolvent(h, w, half_theta + a));
                sum += phase * C64::from_polar(1.0, w * tau) * m[(r, c)];
            }
        }
        Ok(sum / (self.params.beta * self.blocks.len() as f64))
    }

    /// Equal-time entries `C(φ)(ρx0, ηy0)` from their explicit closed forms.
    pub fn equal_time_forms(&self, x: &[i64], y: &[i64]) -> Matrix2<C64> {
        let (beta, c) = (self.params.beta, self.params.cos_half());
        let eiab = C64::from_polar(1.0, -beta * self.params.theta / 2.0);
        let mut out = Matrix2::zeros();
        for b in &self.blocks {
            let big_e = (b.e * b.e + self.phi.norm_sqr()).sqrt();
            let x_b = beta * big_e;
            let den = c + x_b.cosh();
            let sinh_over = if big_e > 0.0 { x_b.sinh() / big_e } else { beta };
            let phase = self.phase(&b.k, x, y);
            for rho in 0..2 {
                let sign = if rho == 0 { -1.0 } else { 1.0 };
                out[(rho, rho)] += phase * ((eiab + x_b.cosh()) / (2.0 * den) + sign * sinh_over * b.e / (2.0 * den));
            }
            out[(0, 1)] += phase * (-self.phi.conj()) * sinh_over / (2.0 * den);
            out[(1, 0)] += phase * (-self.phi) * sinh_over / (2.0 * den);
        }
        out / C64::from(self.blocks.len() as f64)
    }

    /// `Π_k Π_{δ=±1} (1 + e^{−β(iθ/2 + δe(φ)(k))})`.
    pub fn partition_product(&self) -> C64 {
        let (beta, theta) = (self.params.beta, self.params.theta);
        self.blocks
            .iter()
            .map(|b| {
                [1.0, -1.0]
                    .iter()
                    .map(|d| C64::from(1.0) + (-beta * C64::new(d * b.e_full, theta / 2.0)).exp())
                    .product::<C64>()
            })
            .product()
    }

    /// Right-hand side of the determinant bound,
    /// `16 L^{−d} Σ_k (1 + 2cos(βθ/2)e^{−βe(φ)} + e^{−2βe(φ)})^{−1/2}`.
    pub fn determinant_bound_base(&self) -> f64 {
        let (beta, c) = (self.params.beta, self.params.cos_half());
        16.0 * self
            .blocks
            .iter()
            .map(|b| {
                let y = (-beta * b.e_full.abs()).exp();
                1.0 / (1.0 + 2.0 * c * y + y * y).sqrt()
            })
            .sum::<f64>()
            / self.blocks.len() as f64
    }
}

fn on_grid(s: f64, h: f64) -> Result<i64> {
    let n = (s * h).round();
    if (s * h - n).abs() > 1e-9 {
        return Err(Error::validation("s", format!("time {s} is not on the grid (1/{h})Z")));
    }
    Ok(n as i64)
}

/// The smooth cutoff: `1` on `(−∞,1]`, `0` on `[2,∞)`, and the normalized bump
/// `e^{1/(x−2)}/(e^{1/(x−2)} + e^{−1/(x−1)})` in between.
pub fn chi(x: f64) -> f64 {
    if x <= 1.0 {
        1.0
    } else if x >= 2.0 {
        0.0
    } else {
        let a = (1.0 / (x - 2.0)).exp();
        let b = (-1.0 / (x - 1.0)).exp();
        a / (a + b)
    }
}

/// `χ^M(x) = χ((x−M)/(M²−M) + 1)`.
pub fn chi_m(m: f64, x: f64) -> f64 {
    chi((x - m) / (m * m - m) + 1.0)
}

/// Multiscale split of `e^{−iπ(s−t)/β}C(φ)` on the time grid `[0,β)_h`.
#[derive(Debug, Clone)]
pub struct ScaleDecomposition {
    pub m: f64,
    pub h: f64,
    pub n_h: i64,
    pub n_beta: i64,
    /// `βh`.
    pub steps: usize,
    /// Real-space tables: `table[l][(dx, τ + βh − 1)]`, one 2×2 block each.
    table: Vec<Vec<Matrix2<C64>>>,
    params: ModelParams,
}

impl ScaleDecomposition {
    /// Smallest admissible `h ∈ (2/β)N` with `h ≥ max(½max(1,β⁻¹)M², 4d)`.
    pub fn minimal_h(beta: f64, m: f64, d: usize) -> f64 {
        let need = (0.5 * (1.0f64).max(1.0 / beta) * m * m).max(4.0 * d as f64);
        let steps = (need * beta / 2.0).ceil().max(1.0);
        2.0 * steps / beta
    }

    /// `(N_h, N_β)`.
    pub fn scale_indices(beta: f64, h: f64, m: f64) -> (i64, i64) {
        let n_h = ((2.0 * h).ln() / m.ln()).floor() as i64;
        let n_beta = (((1.0 / beta).ln() / m.ln()).floor() as i64 + 1).max(1);
        (n_h, n_beta)
    }

    /// `h|1 − e^{iω/h}|`.
    fn distance(&self, omega: f64) -> f64 {
        2.0 * self.h * (omega / (2.0 * self.h)).sin().abs()
    }

    /// `χ_l(ω)` for `l ∈ {N_β,…,N_h}`.
    pub fn chi_l(&self, l: i64, omega: f64) -> f64 {
        let x = self.distance(omega);
        let at = |j: i64| chi_m(self.m, self.m.powi(-j as i32) * x);
        if l == self.n_beta {
            at(l)
        } else {
            at(l) - at(l - 1)
        }
    }

    /// Number of scale covariances, `N_h − N_β + 2` (indices `0,…,N_h−N_β+1`).
    pub fn levels(&self) -> usize {
        (self.n_h - self.n_beta + 2) as usize
    }

    pub fn new(eval: &CovarianceEvaluator, h: f64, m: f64) -> Result<Self> {
        let p = &eval.params;
        if !(m >= 2.0 * PI) {
            return Err(Error::validation("M", "must be at least 2π"));
        }
        let steps = check_h(p.beta, h)?;
        let need = (0.5 * (1.0f64).max(1.0 / p.beta) * m * m).max(4.0 * p.d as f64);
        if h < need - 1e-12 {
            return Err(Error::validation("h", format!("must be at least {need}")));
        }
        let (n_h, n_beta) = Self::scale_indices(p.beta, h, m);
        let mut dec = ScaleDecomposition { m, h, n_h, n_beta, steps, table: Vec::new(), params: p.clone() };
        let freqs = matsubara_frequencies(p.beta, h)?;
        let half_theta = C64::new(0.0, p.theta / 2.0);
        let first = PI / p.beta;
        // Resolvent blocks R(k, ω).
        let res: Vec<Vec<Matrix2<C64>>> = eval
            .blocks
            .iter()
            .map(|b| freqs.iter().map(|&w| b.spectral(|a| matsubara_resolvent(h, w, half_theta + a))).collect())
            .collect();
        let weight = |l: usize, w: f64| -> f64 {
            let is_first = (w - first).abs() < 1e-9 * first;
            match l {
                0 => f64::from(u8::from(is_first)),
                1 => {
                    if is_first {
                        0.0
                    } else {
                        dec.chi_l(dec.n_beta, w)
                    }
                }
                _ => dec.chi_l(l as i64 + dec.n_beta - 1, w),
            }
        };
        let nk = eval.blocks.len();
        let ntau = 2 * steps - 1;
        let mut table = Vec::with_capacity(dec.levels());
        for l in 0..dec.levels() {
            // Momentum-space tables T_l(k, τ).
            let mut t = vec![Matrix2::<C64>::zeros(); nk * ntau];
            for (ki, row) in res.iter().enumerate() {
                for (wi, &w) in freqs.iter().enumerate() {
                    let wt = weight(l, w);
                    if wt == 0.0 {
                        continue;
                    }
                    for ti in 0..ntau {
                        let tau = (ti as f64 - (steps as f64 - 1.0)) / h;
                        let ph = if l == 0 { C64::from(1.0) } else { C64::from_polar(1.0, tau * (w - first)) };
                        t[ki * ntau + ti] += row[wi] * (ph * wt);
                    }
                }
            }
            // Fourier to real space, site differences in site-index order.
            let nsites = p.volume();
            let mut real = vec![Matrix2::<C64>::zeros(); nsites * ntau];
            for dx in 0..nsites {
                let coords = p.site_coords(dx);
                for (ki, b) in eval.blocks.iter().enumerate() {
                    let arg: f64 = b.k.iter().zip(&coords).map(|(k, x)| k * *x as f64).sum();
                    let ph = C64::from_polar(1.0, arg);
                    for ti in 0..ntau {
                        real[dx * ntau + ti] += t[ki * ntau + ti] * ph;
                    }
                }
            }
            let norm = C64::from(p.beta * nk as f64);
            for v in real.iter_mut() {
                *v /= norm;
            }
            table.push(real);
        }
        dec.table = table;
        Ok(dec)
    }

    fn diff_index(&self, x: &[i64], y: &[i64]) -> usize {
        let dx: Vec<i64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.params.site_index(&dx)
    }

    /// Grid lookup `C_l((ρ, x, s_i/h), (η, y, t_j/h))` by integer time steps.
    #[allow(clippy::too_many_arguments)]
    pub fn entry(&self, l: usize, rho: u8, x: &[i64], si: usize, eta: u8, y: &[i64], tj: usize) -> C64 {
        let ntau = 2 * self.steps - 1;
        let ti = si + self.steps - 1 - tj;
        self.table[l][self.diff_index(x, y) * ntau + ti][((rho - 1) as usize, (eta - 1) as usize)]
    }

    /// `C_l(X, Y)` for grid points.
    pub fn covariance_l(&self, l: usize, x: &BandPoint, y: &BandPoint) -> Result<C64> {
        if l >= self.levels() {
            return Err(Error::validation("l", format!("scale index must be below {}", self.levels())));
        }
        let si = on_grid(x.s, self.h)? as usize;
        let tj = on_grid(y.s, self.h)? as usize;
        Ok(self.entry(l, x.band, &x.x, si, y.band, &y.x, tj))
    }

    /// `‖C̃_l‖_{1,∞} = sup_{X₀} h⁻¹ Σ_X |C̃_l(X₀, X)|` over the finite index set.
    pub fn decay_norm(&self, l: usize) -> f64 {
        let p = &self.params;
        let sites: Vec<Vec<i64>> = (0..p.volume()).map(|i| p.site_coords(i)).collect();
        let origin = vec![0i64; p.d];
        let mut best: f64 = 0.0;
        // Translation invariance in space lets the fixed point sit at the origin.
        for rho in 1..=2u8 {
            for s0 in 0..self.steps {
                let (mut row, mut col) = (0.0, 0.0);
                for eta in 1..=2u8 {
                    for y in &sites {
                        for t in 0..self.steps {
                            row += self.entry(l, rho, &origin, s0, eta, y, t).norm();
                            col += self.entry(l, eta, y, t, rho, &origin, s0).norm();
                        }
                    }
                }
                best = best.max(row).max(col);
            }
        }
        0.5 * best / self.h
    }

    /// Scale reference for the norm of `C̃_l`: `min(1,β)M^{−l}` (`l ≥ 2`),
    /// `β(1+β)^{d+1}` (`l = 1`), `Θ⁻¹(1+Θ⁻¹)^d` (`l = 0`).
    pub fn decay_reference(&self, l: usize) -> f64 {
        let p = &self.params;
        match l {
            0 => {
                let t = p.big_theta();
                (1.0 + 1.0 / t).powi(p.d as i32) / t
            }
            1 => p.beta * (1.0 + p.beta).powi(p.d as i32 + 1),
            _ => p.beta.min(1.0) * self.m.powi(-(l as i32)),
        }
    }

    /// Squared Gram norms `(‖f_X‖², ‖g_Y‖²)` of the single-frequency
    /// covariance `C_0(X,Y) = ⟨f_X, g_Y⟩`; `‖g_Y‖` depends on the band of `Y`.
    pub fn gram_norms(&self, eval: &CovarianceEvaluator, band: u8) -> (f64, f64) {
        let p = &self.params;
        let w = PI / p.beta;
        let half_theta = C64::new(0.0, p.theta / 2.0);
        let nk = eval.blocks.len() as f64;
        let (mut f2, mut g2) = (0.0, 0.0);
        for b in &eval.blocks {
            let r2 = ((w - p.theta / 2.0).powi(2) + b.e * b.e).sqrt();
            f2 += 1.0 / r2;
            let res = b.spectral(|a| matsubara_resolvent(self.h, w, half_theta + a));
            let col = (band - 1) as usize;
            g2 += r2 * (res[(0, col)].norm_sqr() + res[(1, col)].norm_sqr());
        }
        (f2 / (p.beta * nk), g2 / (p.beta * nk))
    }
}

/// Outcome of sampled determinant bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzReport {
    pub trials: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub gram_violations: usize,
    pub gram_max_ratio: f64,
}

fn random_unit(rng: &mut ChaCha8Rng, m: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..m).map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Samples `|det(⟨uᵢ,vⱼ⟩C(Xᵢ,Yⱼ))|` against the determinant bound for the full
/// covariance (continuous times) and against the Gram bound
/// `Πⱼ‖f_{Xⱼ}‖‖g_{Yⱼ}‖` for `C_0` on the grid of the minimal admissible `h`.
pub fn determinant_bound_fuzz(
    params: &ModelParams,
    phi: C64,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<FuzzReport> {
    if n == 0 || m == 0 {
        return Err(Error::validation("n", "n and m must be positive"));
    }
    let eval = CovarianceEvaluator::new(params, phi)?;
    let h = ScaleDecomposition::minimal_h(params.beta, 2.0 * PI, params.d);
    let dec = ScaleDecomposition::new(&eval, h, 2.0 * PI)?;
    let base = eval.determinant_bound_base();
    let gram: [(f64, f64); 2] = [dec.gram_norms(&eval, 1), dec.gram_norms(&eval, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = params.volume();
    let mut report = FuzzReport { trials, violations: 0, max_ratio: 0.0, gram_violations: 0, gram_max_ratio: 0.0 };
    for _ in 0..trials {
        let us: Vec<Vec<C64>> = (0..n).map(|_| random_unit(&mut rng, m)).collect();
        let vs: Vec<Vec<C64>> = (0..n).map(|_| random_unit(&mut rng, m)).collect();
        let mut pick = |continuous: bool| -> BandPoint {
            let band = rng.random_range(1..=2u8);
            let x = params.site_coords(rng.random_range(0..vol));
            let s =
                if continuous { rng.random::<f64>() * params.beta } else { rng.random_range(0..dec.steps) as f64 / h };
            BandPoint::new(band, x, s)
        };
        let xs: Vec<BandPoint> = (0..n).map(|_| pick(true)).collect();
        let ys: Vec<BandPoint> = (0..n).map(|_| pick(true)).collect();
        let gx: Vec<BandPoint> = (0..n).map(|_| pick(false)).collect();
        let gy: Vec<BandPoint> = (0..n).map(|_| pick(false)).collect();

        let mut a = DMatrix::<C64>::zeros(n, n);
        let mut g = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let uv = inner(&us[i], &vs[j]);
                a[(i, j)] = uv * eval.covariance(&xs[i], &ys[j])?;
                g[(i, j)] = uv * dec.covariance_l(0, &gx[i], &gy[j])?;
            }
        }
        let ratio = a.determinant().norm() / base.powi(n as i32);
        report.max_ratio = report.max_ratio.max(ratio);
        if ratio > 1.0 {
            report.violations += 1;
        }
        let gram_rhs: f64 = (0..n).map(|j| (gram[0].0 * gram[(gy[j].band - 1) as usize].1).sqrt()).product();
        let gram_ratio = g.determinant().norm() / gram_rhs;
        report.gram_max_ratio = report.gram_max_ratio.max(gram_ratio);
        if gram_ratio > 1.0 + 1e-12 {
            report.gram_violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_site_occupation() {
        let p = ModelParams { l: 1, ..ModelParams::default() };
        let ev = CovarianceEvaluator::new(&p, C64::from(0.0)).unwrap();
        let x = BandPoint::new(1, vec![0], 0.0);
        let c = ev.covariance(&x, &x).unwrap();
        assert!((c.re - 1.0 / (1.0 + 2f64.exp())).abs() < 1e-15);
        assert!(c.im.abs() < 1e-15);
    }

    #[test]
    fn minimal_h_for_unit_beta() {
        let h = ScaleDecomposition::minimal_h(1.0, 2.0 * PI, 1);
        assert_eq!(h, 20.0);
        assert_eq!(ScaleDecomposition::scale_indices(1.0, 64.0, 2.0 * PI), (2, 1));
    }
}
