//! A finite Grassmann algebra with Gaussian integration, the spin and band
//! Grassmann actions on the discrete time grid `[0,β)_h`, the discrete
//! perturbation series `P_h`, the Hubbard–Stratonovich identity at element
//! level and logarithmic moment expansions.
//!
//! Generators are indexed `0..2n₀` for `n₀` labels: the barred generator
//! `ψ̄_X` has index `X` and `ψ_X` has index `n₀ + X`. A monomial is a bitmask
//! standing for the product of its generators in ascending index order.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::covariance::{check_h, level_propagator, BandPoint, CovarianceEvaluator};
use crate::error::{Error, Result};
use crate::fock::{band_mode, build_spin_operators, spin_free_product, spin_mode, SectorBasis, SpinPoint};
use crate::model::{lattice_dispersions, ModelParams};

/// Largest number of generators.
pub const MAX_GENERATORS: usize = 24;

/// Sign of `m_a · m_b` relative to the canonical monomial `m_a ∪ m_b`.
fn merge_sign(a: u32, b: u32) -> f64 {
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let j = rest.trailing_zeros();
        swaps += (a >> j >> 1).count_ones();
        rest &= rest - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// An element of the Grassmann algebra over `generators` generators.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannElement {
    generators: usize,
    coeffs: BTreeMap<u32, C64>,
}

impl GrassmannElement {
    pub fn zero(generators: usize) -> Result<Self> {
        if generators > MAX_GENERATORS {
            return Err(Error::Capacity {
                what: "Grassmann generators".into(),
                required: generators,
                cap: MAX_GENERATORS,
            });
        }
        Ok(GrassmannElement { generators, coeffs: BTreeMap::new() })
    }

    pub fn constant(generators: usize, c: impl Into<C64>) -> Result<Self> {
        let mut e = GrassmannElement::zero(generators)?;
        e.add_monomial(0, c.into());
        Ok(e)
    }

    pub fn one(generators: usize) -> Result<Self> {
        GrassmannElement::constant(generators, 1.0)
    }

    /// The single generator with index `i`.
    pub fn generator(generators: usize, i: usize) -> Result<Self> {
        if i >= generators {
            return Err(Error::validation("generator", format!("index {i} outside 0..{generators}")));
        }
        let mut e = GrassmannElement::zero(generators)?;
        e.add_monomial(1 << i, C64::from(1.0));
        Ok(e)
    }

    /// `c · g_{i_1} ⋯ g_{i_k}` in the given (not necessarily sorted) order.
    pub fn product_of(generators: usize, c: impl Into<C64>, indices: &[usize]) -> Result<Self> {
        let mut e = GrassmannElement::constant(generators, c)?;
        for &i in indices {
            e = e.wedge(&GrassmannElement::generator(generators, i)?)?;
        }
        Ok(e)
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    /// Canonical monomials with nonzero coefficient.
    pub fn terms(&self) -> impl Iterator<Item = (u32, C64)> + '_ {
        self.coeffs.iter().map(|(&m, &c)| (m, c))
    }

    pub fn coefficient(&self, mask: u32) -> C64 {
        self.coeffs.get(&mask).copied().unwrap_or_default()
    }

    /// Degree-zero part.
    pub fn constant_part(&self) -> C64 {
        self.coefficient(0)
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// True if every monomial has even degree.
    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|m| m.count_ones() % 2 == 0)
    }

    pub fn add_monomial(&mut self, mask: u32, c: C64) {
        if c == C64::from(0.0) {
            return;
        }
        let slot = self.coeffs.entry(mask).or_default();
        *slot += c;
        if *slot == C64::from(0.0) {
            self.coeffs.remove(&mask);
        }
    }

    fn same_universe(&self, other: &Self) -> Result<()> {
        if self.generators != other.generators {
            return Err(Error::validation("generators", "elements live in different algebras"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_universe(other)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_monomial(m, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        let mut out = GrassmannElement { generators: self.generators, coeffs: BTreeMap::new() };
        for (m, v) in self.terms() {
            out.add_monomial(m, v * c);
        }
        out
    }

    /// The exterior product `self ∧ other`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        self.same_universe(other)?;
        let mut out = GrassmannElement { generators: self.generators, coeffs: BTreeMap::new() };
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if a & b == 0 {
                    out.add_monomial(a | b, ca * cb * merge_sign(a, b));
                }
            }
        }
        Ok(out)
    }

    /// Largest coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: Vec<u32> = self.coeffs.keys().chain(other.coeffs.keys()).copied().collect();
        keys.sort_unstable();
        keys.dedup();
        keys.iter().map(|&m| (self.coefficient(m) - other.coefficient(m)).norm()).fold(0.0, f64::max)
    }
}

/// `e^f` by the terminating series in the nilpotent part.
pub fn exp_element(f: &GrassmannElement) -> Result<GrassmannElement> {
    let c0 = f.constant_part();
    let mut g = f.clone();
    g.coeffs.remove(&0);
    let mut out = GrassmannElement::one(f.generators)?;
    let mut power = GrassmannElement::one(f.generators)?;
    for k in 1..=f.generators + 1 {
        power = power.wedge(&g)?.scale(1.0 / k as f64);
        if power.is_empty() {
            break;
        }
        out = out.add(&power)?;
    }
    Ok(out.scale(c0.exp()))
}

/// Principal `log f`; the constant part must not lie on `(−∞, 0]`.
pub fn log_element(f: &GrassmannElement) -> Result<GrassmannElement> {
    let c0 = f.constant_part();
    if c0.im == 0.0 && c0.re <= 0.0 {
        return Err(Error::Domain(format!("logarithm of an element with constant part {c0}")));
    }
    let mut g = f.scale(1.0 / c0);
    g.coeffs.remove(&0);
    let mut out = GrassmannElement::constant(f.generators, c0.ln())?;
    let mut power = GrassmannElement::one(f.generators)?;
    for k in 1..=f.generators + 1 {
        power = power.wedge(&g)?;
        if power.is_empty() {
            break;
        }
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        out = out.add(&power.scale(sign / k as f64))?;
    }
    Ok(out)
}

/// A covariance `D(X, Y)` on `n₀` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariance {
    pub table: DMatrix<C64>,
}

impl Covariance {
    pub fn labels(&self) -> usize {
        self.table.nrows()
    }

    pub fn generators(&self) -> usize {
        2 * self.labels()
    }

    fn split(&self, mask: u32) -> (Vec<usize>, Vec<usize>) {
        let n0 = self.labels();
        let bars = (0..n0).filter(|&i| mask >> i & 1 == 1).collect();
        let plain = (0..n0).filter(|&i| mask >> (n0 + i) & 1 == 1).collect();
        (bars, plain)
    }

    /// `∫ m dμ_D` of a canonical monomial from the determinant definition
    /// `∫ ψ̄_{X_1}⋯ψ̄_{X_a}ψ_{Y_a}⋯ψ_{Y_1} dμ_D = det(D(X_i, Y_j))`.
    pub fn monomial_integral(&self, mask: u32) -> C64 {
        let (xs, ys) = self.split(mask);
        if xs.len() != ys.len() {
            return C64::from(0.0);
        }
        let a = xs.len();
        if a == 0 {
            return C64::from(1.0);
        }
        let m = DMatrix::from_fn(a, a, |i, j| self.table[(xs[i], ys[j])]);
        // Canonical order lists the ψ_Y ascending; reversing costs a(a−1)/2 swaps.
        let sign = if (a * (a - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        m.determinant() * sign
    }

    /// `∫ m dμ_D` by Wick pairing: the Pfaffian of the antisymmetric extension
    /// `Ĉ(ψ̄_X, ψ_Y) = D(X,Y) = −Ĉ(ψ_Y, ψ̄_X)` restricted to the generators of `m`.
    pub fn monomial_integral_wick(&self, mask: u32) -> C64 {
        let n0 = self.labels();
        let gens: Vec<usize> = (0..2 * n0).filter(|&i| mask >> i & 1 == 1).collect();
        if gens.len() % 2 == 1 {
            return C64::from(0.0);
        }
        let pair = |g: usize, h: usize| -> C64 {
            match (g < n0, h < n0) {
                (true, false) => self.table[(g, h - n0)],
                (false, true) => -self.table[(h, g - n0)],
                _ => C64::from(0.0),
            }
        };
        let m = DMatrix::from_fn(gens.len(), gens.len(), |i, j| pair(gens[i], gens[j]));
        pfaffian(m)
    }
}

/// Pfaffian of an antisymmetric matrix by pivoted congruence elimination.
pub fn pfaffian(mut a: DMatrix<C64>) -> C64 {
    let n = a.nrows();
    if n % 2 == 1 {
        return C64::from(0.0);
    }
    let mut pf = C64::from(1.0);
    for k in (0..n).step_by(2) {
        let (piv, best) =
            (k + 1..n).map(|j| (j, a[(k, j)].norm())).fold((k + 1, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best == 0.0 {
            return C64::from(0.0);
        }
        if piv != k + 1 {
            a.swap_rows(k + 1, piv);
            a.swap_columns(k + 1, piv);
            pf = -pf;
        }
        let p = a[(k, k + 1)];
        pf *= p;
        let tau: Vec<C64> = (k + 2..n).map(|j| a[(k, j)] / p).collect();
        for i in k + 2..n {
            for j in k + 2..n {
                let d = tau[j - k - 2] * a[(i, k + 1)] + tau[i - k - 2] * a[(k + 1, j)];
                a[(i, j)] -= d;
            }
        }
    }
    pf
}

fn integrate_with(f: &GrassmannElement, cov: &Covariance, mono: impl Fn(u32) -> C64) -> Result<C64> {
    if f.generators != cov.generators() {
        return Err(Error::validation("covariance", "generator universe does not match the covariance"));
    }
    Ok(f.terms().map(|(m, c)| c * mono(m)).sum())
}

/// `∫ f dμ_D` from the determinant definition.
pub fn gaussian_integral(f: &GrassmannElement, cov: &Covariance) -> Result<C64> {
    integrate_with(f, cov, |m| cov.monomial_integral(m))
}

/// `∫ f dμ_D` by Wick pairing.
pub fn gaussian_integral_wick(f: &GrassmannElement, cov: &Covariance) -> Result<C64> {
    integrate_with(f, cov, |m| cov.monomial_integral_wick(m))
}

/// A polynomial in the couplings `(U, γ, λ_1, λ_2)`, keyed by exponents.
pub type CouplingPoly = BTreeMap<[u32; 4], C64>;

fn poly_monomial(c: f64, exps: [u32; 4]) -> CouplingPoly {
    let mut p = CouplingPoly::new();
    if c != 0.0 {
        p.insert(exps, C64::from(c));
    }
    p
}

fn poly_add_into(acc: &mut CouplingPoly, p: &CouplingPoly, scale: C64) {
    for (k, v) in p {
        *acc.entry(*k).or_default() += v * scale;
    }
}

fn poly_mul(a: &CouplingPoly, b: &CouplingPoly) -> CouplingPoly {
    let mut out = CouplingPoly::new();
    for (ka, va) in a {
        for (kb, vb) in b {
            let k = [ka[0] + kb[0], ka[1] + kb[1], ka[2] + kb[2], ka[3] + kb[3]];
            *out.entry(k).or_default() += va * vb;
        }
    }
    out
}

/// Value of `p` at `couplings = (U, γ, λ_1, λ_2)`.
pub fn poly_eval(p: &CouplingPoly, couplings: [C64; 4]) -> C64 {
    p.iter().map(|(k, v)| v * k.iter().zip(couplings).map(|(&e, c)| c.powu(e)).product::<C64>()).sum()
}

/// Largest coefficient difference of two polynomials.
pub fn poly_max_diff(a: &CouplingPoly, b: &CouplingPoly) -> f64 {
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default()).norm())
        .fold(0.0, f64::max)
}

/// The label set `Γ × {↑,↓} × [0,β)_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinIndex {
    pub sites: usize,
    pub steps: usize,
    pub h: f64,
}

impl SpinIndex {
    pub fn new(params: &ModelParams, h: f64) -> Result<Self> {
        if !(params.beta > 0.0) {
            return Err(Error::validation("beta", "must be positive"));
        }
        let steps = check_h(params.beta, h)?;
        let index = SpinIndex { sites: params.volume(), steps, h };
        if 2 * index.labels() > MAX_GENERATORS {
            return Err(Error::Capacity {
                what: "Grassmann generators".into(),
                required: 2 * index.labels(),
                cap: MAX_GENERATORS,
            });
        }
        Ok(index)
    }

    pub fn labels(&self) -> usize {
        2 * self.sites * self.steps
    }

    pub fn label(&self, site: usize, up: bool, step: usize) -> usize {
        spin_mode(site, up) * self.steps + step
    }

    /// Index of `ψ̄_{(site,σ,s)}`.
    pub fn bar(&self, site: usize, up: bool, step: usize) -> usize {
        self.label(site, up, step)
    }

    /// Index of `ψ_{(site,σ,s)}`.
    pub fn plain(&self, site: usize, up: bool, step: usize) -> usize {
        self.labels() + self.label(site, up, step)
    }

    pub fn time(&self, step: usize) -> f64 {
        step as f64 / self.h
    }
}

/// One weighted monomial of an action.
#[derive(Debug, Clone, PartialEq)]
struct Atom {
    weight: CouplingPoly,
    mask: u32,
    sign: f64,
}

fn atom(weight: CouplingPoly, indices: &[usize]) -> Atom {
    let mut mask = 0u32;
    let mut sign = 1.0;
    for &i in indices {
        let b = 1u32 << i;
        sign *= merge_sign(mask, b);
        mask |= b;
    }
    Atom { weight, mask, sign }
}

fn assemble(generators: usize, atoms: &[Atom], couplings: [C64; 4]) -> Result<GrassmannElement> {
    let mut e = GrassmannElement::zero(generators)?;
    for a in atoms {
        e.add_monomial(a.mask, poly_eval(&a.weight, couplings) * a.sign);
    }
    Ok(e)
}

/// Spin-model Grassmann actions on `Γ × {↑,↓} × [0,β)_h`.
#[derive(Debug, Clone)]
pub struct SpinActions {
    pub index: SpinIndex,
    /// `U/(hL^d) Σ_{x,y,s} ψ̄_{x↑s}ψ̄_{x↓s}ψ_{y↓s}ψ_{y↑s}`.
    pub v: GrassmannElement,
    /// `(γ/h) Σ_{x,s} (ψ̄_{x↑s}ψ̄_{x↓s} + ψ_{x↓s}ψ_{x↑s})`.
    pub f: GrassmannElement,
    /// `λ_1 A^1 + λ_2 A^2` with `A^1 = (1/h)Σ_s ψ̄_{x̂↑s}ψ̄_{x̂↓s}`, `A^2 = (1/h)Σ_s ψ̄_{x̂↑s}ψ̄_{x̂↓s}ψ_{ŷ↓s}ψ_{ŷ↑s}`.
    pub a: GrassmannElement,
    pub v_plus: GrassmannElement,
    pub v_minus: GrassmannElement,
    pub w_plus: GrassmannElement,
    pub w_minus: GrassmannElement,
    /// `U/(βL^d h²) Σ_{x,y,s,t} ψ̄_{x↑s}ψ̄_{x↓s}ψ_{y↓t}ψ_{y↑t}`.
    pub w: GrassmannElement,
    atoms: Vec<Atom>,
}

/// Assembles the spin actions at coupling `λ = (λ_1, λ_2)`.
pub fn build_spin_actions(params: &ModelParams, h: f64, lambda: [C64; 2]) -> Result<SpinActions> {
    let ix = SpinIndex::new(params, h)?;
    let n = ix.generators_count();
    let (sites, steps) = (ix.sites, ix.steps);
    let inv_h = 1.0 / h;
    let pair_bar = |x: usize, s: usize| [ix.bar(x, true, s), ix.bar(x, false, s)];
    let pair_plain = |y: usize, s: usize| [ix.plain(y, false, s), ix.plain(y, true, s)];
    let quartet = |x: usize, y: usize, s: usize, t: usize| {
        let mut g = pair_bar(x, s).to_vec();
        g.extend(pair_plain(y, t));
        g
    };
    let xh = params.xhat_index();
    let yh = params.yhat_index();
    let vol = sites as f64;
    let mut v_atoms = Vec::new();
    let mut f_atoms = Vec::new();
    let mut a1_atoms = Vec::new();
    let mut a2_atoms = Vec::new();
    for s in 0..steps {
        for x in 0..sites {
            for y in 0..sites {
                v_atoms.push(atom(poly_monomial(inv_h / vol, [1, 0, 0, 0]), &quartet(x, y, s, s)));
            }
            f_atoms.push(atom(poly_monomial(inv_h, [0, 1, 0, 0]), &pair_bar(x, s)));
            f_atoms.push(atom(poly_monomial(inv_h, [0, 1, 0, 0]), &pair_plain(x, s)));
        }
        a1_atoms.push(atom(poly_monomial(inv_h, [0, 0, 1, 0]), &pair_bar(xh, s)));
        if let Some(yh) = yh {
            a2_atoms.push(atom(poly_monomial(inv_h, [0, 0, 0, 1]), &quartet(xh, yh, s, s)));
        }
    }
    let couplings = [C64::from(params.u), C64::from(params.gamma), lambda[0], lambda[1]];
    let c = (params.abs_u() / (params.beta * vol)).sqrt();
    let mut v_plus = GrassmannElement::zero(n)?;
    let mut v_minus = GrassmannElement::zero(n)?;
    let mut w = GrassmannElement::zero(n)?;
    for s in 0..steps {
        for x in 0..sites {
            let p = atom(CouplingPoly::new(), &pair_bar(x, s));
            v_plus.add_monomial(p.mask, C64::from(c * inv_h * p.sign));
            let m = atom(CouplingPoly::new(), &pair_plain(x, s));
            v_minus.add_monomial(m.mask, C64::from(c * inv_h * m.sign));
            for t in 0..steps {
                for y in 0..sites {
                    let q = atom(CouplingPoly::new(), &quartet(x, y, s, t));
                    w.add_monomial(q.mask, C64::from(params.u / (params.beta * vol) * inv_h * inv_h * q.sign));
                }
            }
        }
    }
    let mut a_atoms = a1_atoms;
    a_atoms.extend(a2_atoms);
    let mut atoms = v_atoms.clone();
    atoms.extend(f_atoms.iter().cloned());
    atoms.extend(a_atoms.iter().cloned());
    Ok(SpinActions {
        v: assemble(n, &v_atoms, couplings)?,
        f: assemble(n, &f_atoms, couplings)?,
        a: assemble(n, &a_atoms, couplings)?,
        w_plus: v_plus.scale(C64::i()),
        w_minus: v_minus.scale(C64::i()),
        v_plus,
        v_minus,
        w,
        atoms,
        index: ix,
    })
}

impl SpinIndex {
    pub fn generators_count(&self) -> usize {
        2 * self.labels()
    }
}

/// Band-model Grassmann actions on `{1,2} × Γ × [0,β)_h`.
#[derive(Debug, Clone)]
pub struct BandActions {
    pub v: GrassmannElement,
    pub w: GrassmannElement,
    pub a1: GrassmannElement,
    pub a2: Option<GrassmannElement>,
}

/// Label of `(ρ, x, s)` in the band index set.
pub fn band_label(steps: usize, band: u8, site: usize, step: usize) -> usize {
    band_mode(site, band) * steps + step
}

/// Assembles the band actions `V`, `W`, `A^1`, `A^2`.
pub fn build_band_actions(params: &ModelParams, h: f64) -> Result<BandActions> {
    let ix = SpinIndex::new(params, h)?;
    let (sites, steps, n0) = (ix.sites, ix.steps, ix.labels());
    let n = 2 * n0;
    let bar = |b: u8, x: usize, s: usize| band_label(steps, b, x, s);
    let plain = |b: u8, x: usize, s: usize| n0 + band_label(steps, b, x, s);
    let vol = sites as f64;
    let inv_h = 1.0 / h;
    let mut v = GrassmannElement::zero(n)?;
    let mut w = GrassmannElement::zero(n)?;
    let quartet = |x: usize, s: usize, y: usize, t: usize| [bar(1, x, s), plain(2, x, s), bar(2, y, t), plain(1, y, t)];
    for s in 0..steps {
        for x in 0..sites {
            v = v.add(&GrassmannElement::product_of(n, params.u / vol * inv_h, &[bar(1, x, s), plain(1, x, s)])?)?;
            for y in 0..sites {
                v = v.add(&GrassmannElement::product_of(n, params.u / vol * inv_h, &quartet(x, s, y, s))?)?;
                for t in 0..steps {
                    let c = params.u / (params.beta * vol) * inv_h * inv_h;
                    w = w.add(&GrassmannElement::product_of(n, c, &quartet(x, s, y, t))?)?;
                }
            }
        }
    }
    let xh = params.xhat_index();
    let mut a1 = GrassmannElement::zero(n)?;
    for s in 0..steps {
        a1 = a1.add(&GrassmannElement::product_of(n, inv_h, &[bar(1, xh, s), plain(2, xh, s)])?)?;
    }
    let a2 = match params.yhat_index() {
        None => None,
        Some(yh) => {
            let mut a2 = GrassmannElement::zero(n)?;
            for s in 0..steps {
                a2 = a2.add(&GrassmannElement::product_of(n, inv_h, &quartet(xh, s, yh, s))?)?;
            }
            Some(a2)
        }
    };
    Ok(BandActions { v, w, a1, a2 })
}

/// The free spin two-point function
/// `G(xσs, yτt) = δ_στ L^{−d} Σ_k e^{ik(x−y)} g(e(k) ± iθ/2, s−t)` with the
/// time-ordered level propagator `g`; `+` for `↑`, `−` for `↓`.
pub fn covariance_g(params: &ModelParams, x: &SpinPoint, y: &SpinPoint) -> C64 {
    if x.up != y.up {
        return C64::from(0.0);
    }
    let theta = if x.up { params.theta } else { -params.theta };
    let tau = x.s - y.s;
    let grid = params.momentum_grid();
    let es = lattice_dispersions(params);
    let sum: C64 = grid
        .points
        .iter()
        .zip(&es)
        .map(|(k, &e)| {
            let arg: f64 = k.iter().zip(x.x.iter().zip(&y.x)).map(|(kj, (a, b))| kj * (a - b) as f64).sum();
            C64::from_polar(1.0, arg) * level_propagator(params.beta, theta, e, tau, x.s >= y.s)
        })
        .sum();
    sum / es.len() as f64
}

/// `G` tabulated on the spin labels of the grid `[0,β)_h`.
pub fn spin_covariance_table(params: &ModelParams, h: f64) -> Result<Covariance> {
    let ix = SpinIndex::new(params, h)?;
    let point = |label: usize| {
        let (mode, step) = (label / ix.steps, label % ix.steps);
        SpinPoint { x: params.site_coords(mode / 2), up: mode % 2 == 0, s: ix.time(step) }
    };
    let n0 = ix.labels();
    let pts: Vec<SpinPoint> = (0..n0).map(point).collect();
    Ok(Covariance { table: DMatrix::from_fn(n0, n0, |i, j| covariance_g(params, &pts[i], &pts[j])) })
}

/// `C(φ)` tabulated on the band labels of the grid `[0,β)_h`.
pub fn band_covariance_table(params: &ModelParams, phi: C64, h: f64) -> Result<Covariance> {
    let ix = SpinIndex::new(params, h)?;
    let eval = CovarianceEvaluator::new(params, phi)?;
    let n0 = ix.labels();
    let point = |label: usize| {
        let (mode, step) = (label / ix.steps, label % ix.steps);
        BandPoint::new(if mode % 2 == 0 { 1 } else { 2 }, params.site_coords(mode / 2), ix.time(step))
    };
    let pts: Vec<BandPoint> = (0..n0).map(point).collect();
    let mut table = DMatrix::zeros(n0, n0);
    for i in 0..n0 {
        for j in 0..n0 {
            table[(i, j)] = eval.covariance(&pts[i], &pts[j])?;
        }
    }
    Ok(Covariance { table })
}

/// The Grassmann partition function and its discrete series at one `h`.
#[derive(Debug, Clone, Serialize)]
pub struct GrassmannPartition {
    pub steps: usize,
    /// `∫ e^{−V−F−A} dμ_G` by the exponential series.
    pub integral: C64,
    /// `P_h` without the distinct-times constraint.
    pub p_unconstrained: C64,
    /// `P_h` as defined, with pairwise distinct times.
    pub p_distinct: C64,
    /// `Tr e^{−β(H+iθS_z+F+A)} / Tr e^{−β(H_0+iθS_z)}`.
    pub trace_ratio: C64,
    /// Largest coefficient difference between the unconstrained `P_h` and the
    /// algebraic expansion of `∫ e^{−V−F−A} dμ_G` as polynomials in `(U, γ, λ_1, λ_2)`.
    pub coefficient_err: f64,
}

/// `∫ Π_i (1 − t_i) dμ_G` over the action atoms, as a polynomial in the couplings.
fn integral_polynomial(atoms: &[Atom], cov: &Covariance) -> CouplingPoly {
    let mut state: BTreeMap<u32, CouplingPoly> = BTreeMap::new();
    state.insert(0, poly_monomial(1.0, [0; 4]));
    for a in atoms {
        let mut next = state.clone();
        for (&m, p) in &state {
            if m & a.mask != 0 {
                continue;
            }
            let term = poly_mul(p, &a.weight);
            let entry = next.entry(m | a.mask).or_default();
            poly_add_into(entry, &term, C64::from(-a.sign * merge_sign(m, a.mask)));
        }
        state = next;
    }
    let mut out = CouplingPoly::new();
    for (m, p) in &state {
        let i = cov.monomial_integral(*m);
        if i != C64::from(0.0) {
            poly_add_into(&mut out, p, i);
        }
    }
    out.retain(|_, v| v.norm() > 0.0);
    out
}

/// A term `V(x, y, a)` of `P_h` at one time step.
struct SeriesTerm {
    weight: CouplingPoly,
    step: usize,
    a: i32,
    xs: Vec<usize>,
    ys: Vec<usize>,
    mask: u32,
}

fn series_terms(params: &ModelParams, ix: &SpinIndex) -> Vec<SeriesTerm> {
    let (sites, steps) = (ix.sites, ix.steps);
    let vol = sites as f64;
    let xh = params.xhat_index();
    let yh = params.yhat_index();
    let mut terms = Vec::new();
    let pair = |x: usize, s: usize| vec![ix.label(x, true, s), ix.label(x, false, s)];
    let mask_of = |xs: &[usize], ys: &[usize]| {
        xs.iter().fold(0u32, |m, &i| m | 1 << i) | ys.iter().fold(0u32, |m, &i| m | 1 << (ix.labels() + i))
    };
    for s in 0..steps {
        for x in 0..sites {
            for y in 0..sites {
                let mut w = poly_monomial(1.0 / vol, [1, 0, 0, 0]);
                if x == xh && Some(y) == yh {
                    poly_add_into(&mut w, &poly_monomial(1.0, [0, 0, 0, 1]), C64::from(1.0));
                }
                let (xs, ys) = (pair(x, s), pair(y, s));
                terms.push(SeriesTerm { mask: mask_of(&xs, &ys), weight: w, step: s, a: 0, xs, ys });
            }
        }
        for x in 0..sites {
            let mut w = poly_monomial(1.0, [0, 1, 0, 0]);
            if x == xh {
                poly_add_into(&mut w, &poly_monomial(1.0, [0, 0, 1, 0]), C64::from(1.0));
            }
            let xs = pair(x, s);
            terms.push(SeriesTerm { mask: mask_of(&xs, &[]), weight: w, step: s, a: 1, xs, ys: vec![] });
        }
        for y in 0..sites {
            let ys = pair(y, s);
            terms.push(SeriesTerm {
                mask: mask_of(&[], &ys),
                weight: poly_monomial(1.0, [0, 1, 0, 0]),
                step: s,
                a: -1,
                xs: vec![],
                ys,
            });
        }
    }
    // X^0, Y^0 come from a = 0 terms, then X^1 from a = 1, Y^1 from a = −1.
    terms.sort_by_key(|t| match t.a {
        0 => 0,
        1 => 1,
        _ => 2,
    });
    terms
}

struct SeriesWalk<'a> {
    terms: &'a [SeriesTerm],
    cov: &'a Covariance,
    inv_h: f64,
    distinct: bool,
    out: CouplingPoly,
}

impl SeriesWalk<'_> {
    fn walk(&mut self, idx: usize, mask: u32, steps_used: u64, sum_a: i32, chosen: &mut Vec<usize>) {
        if idx == self.terms.len() {
            if sum_a != 0 {
                return;
            }
            let xs: Vec<usize> = chosen.iter().flat_map(|&i| self.terms[i].xs.iter().copied()).collect();
            let ys: Vec<usize> = chosen.iter().flat_map(|&i| self.terms[i].ys.iter().copied()).collect();
            let det = if xs.is_empty() {
                C64::from(1.0)
            } else {
                DMatrix::from_fn(xs.len(), ys.len(), |i, j| self.cov.table[(xs[i], ys[j])]).determinant()
            };
            let mut w = poly_monomial(1.0, [0; 4]);
            for &i in chosen.iter() {
                w = poly_mul(&w, &self.terms[i].weight);
            }
            let n = chosen.len() as i32;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            poly_add_into(&mut self.out, &w, det * sign * self.inv_h.powi(n));
            return;
        }
        self.walk(idx + 1, mask, steps_used, sum_a, chosen);
        let t = &self.terms[idx];
        let step_bit = 1u64 << t.step;
        if t.mask & mask != 0 || (self.distinct && steps_used & step_bit != 0) {
            return;
        }
        chosen.push(idx);
        self.walk(idx + 1, mask | t.mask, steps_used | step_bit, sum_a + t.a, chosen);
        chosen.pop();
    }
}

/// `P_h` as a polynomial in the couplings. Terms sharing a generator give a
/// determinant with a repeated row or column and are skipped.
fn series_polynomial(params: &ModelParams, ix: &SpinIndex, cov: &Covariance, distinct: bool) -> CouplingPoly {
    let terms = series_terms(params, ix);
    let mut walk = SeriesWalk { terms: &terms, cov, inv_h: 1.0 / ix.h, distinct, out: CouplingPoly::new() };
    walk.walk(0, 0, 0, 0, &mut Vec::new());
    walk.out.retain(|_, v| v.norm() > 0.0);
    walk.out
}

/// Trace ratio `Tr e^{−β(H+iθS_z+F+A)} / Tr e^{−β(H_0+iθS_z)}`.
pub fn spin_trace_ratio(params: &ModelParams, lambda: [C64; 2]) -> Result<C64> {
    let ops = build_spin_operators(params)?;
    let mut k = ops.h().plus(&ops.sz.scaled(C64::new(0.0, params.theta))).plus(&ops.f).plus(&ops.a1.scaled(lambda[0]));
    if let Some(a2) = &ops.a2 {
        k = k.plus(&a2.scaled(lambda[1]));
    }
    let basis = SectorBasis::by_spin(ops.space);
    Ok(crate::fock::block_trace(&basis.blocks(&k)?, params.beta, None)? / spin_free_product(params))
}

/// `∫ e^{−V−F−A} dμ_G`, both forms of `P_h`, the trace ratio, and the
/// coefficient-level comparison of the unconstrained series with the integral.
pub fn partition_via_grassmann(params: &ModelParams, h: f64, lambda: [C64; 2]) -> Result<GrassmannPartition> {
    let actions = build_spin_actions(params, h, lambda)?;
    let cov = spin_covariance_table(params, h)?;
    let exponent = actions.v.add(&actions.f)?.add(&actions.a)?.scale(-1.0);
    let integral = gaussian_integral(&exp_element(&exponent)?, &cov)?;
    let couplings = [C64::from(params.u), C64::from(params.gamma), lambda[0], lambda[1]];
    let algebraic = integral_polynomial(&actions.atoms, &cov);
    let unconstrained = series_polynomial(params, &actions.index, &cov, false);
    let distinct = series_polynomial(params, &actions.index, &cov, true);
    Ok(GrassmannPartition {
        steps: actions.index.steps,
        integral,
        p_unconstrained: poly_eval(&unconstrained, couplings),
        p_distinct: poly_eval(&distinct, couplings),
        trace_ratio: spin_trace_ratio(params, lambda)?,
        coefficient_err: poly_max_diff(&unconstrained, &algebraic),
    })
}

/// Largest coefficient error between `e^{−V−F−A}` and the Gauss–Hermite
/// assembly of `(1/π)∫ dφ e^{−|φ|²} e^{−V+W−F−A+φV_++φ̄V_−}`.
pub fn hs_identity_check(params: &ModelParams, h: f64, nodes: usize, lambda: [C64; 2]) -> Result<f64> {
    let actions = build_spin_actions(params, h, lambda)?;
    let degree = 2 * actions.index.sites * actions.index.steps;
    if nodes < 2 * degree + 1 {
        return Err(Error::validation("nodes", format!("at least {} nodes are needed for exactness", 2 * degree + 1)));
    }
    let n = actions.index.generators_count();
    let base = actions.v.add(&actions.f)?.add(&actions.a)?.scale(-1.0);
    let lhs = exp_element(&base)?;
    let shifted = base.add(&actions.w)?;
    let rule = GaussHermite::new(NonZeroUsize::new(nodes).unwrap());
    let pts: Vec<(f64, f64)> = rule.iter().map(|(x, w)| (*x, *w)).collect();
    let mut rhs = GrassmannElement::zero(n)?;
    for &(u, wu) in &pts {
        for &(v, wv) in &pts {
            let phi = C64::new(u, v);
            let e = shifted.add(&actions.v_plus.scale(phi))?.add(&actions.v_minus.scale(phi.conj()))?;
            rhs = rhs.add(&exp_element(&e)?.scale(wu * wv / PI))?;
        }
    }
    Ok(lhs.max_abs_diff(&rhs))
}

/// Coefficients `(1/n!)(d/dz)^n log ∫ e^{zf} dμ_C |_{z=0}` for `n = 1..=order` by two routes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogMoments {
    /// Power-series logarithm of `Σ_k z^k ∫f^k dμ_C / k!`.
    pub series: Vec<C64>,
    /// `κ_n / n!` from the moment–cumulant recursion.
    pub cumulants: Vec<C64>,
    pub max_diff: f64,
}

/// Logarithmic moments of an even element.
pub fn log_moment_check(f: &GrassmannElement, cov: &Covariance, order: usize) -> Result<LogMoments> {
    if !f.is_even() {
        return Err(Error::validation("f", "must be even"));
    }
    let mut moments = vec![C64::from(1.0)];
    let mut power = GrassmannElement::one(f.generators)?;
    for _ in 0..order {
        power = power.wedge(f)?;
        moments.push(gaussian_integral(&power, cov)?);
    }
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let a: Vec<C64> = moments.iter().enumerate().map(|(k, m)| m / fact(k)).collect();
    let mut b = vec![C64::from(0.0); order + 1];
    for m in 1..=order {
        let corr: C64 = (1..m).map(|k| b[k] * a[m - k] * k as f64).sum();
        b[m] = a[m] - corr / m as f64;
    }
    let binom = |n: usize, k: usize| fact(n) / (fact(k) * fact(n - k));
    let mut kappa = vec![C64::from(0.0); order + 1];
    for n in 1..=order {
        let corr: C64 = (1..n).map(|m| kappa[m] * moments[n - m] * binom(n - 1, m - 1)).sum();
        kappa[n] = moments[n] - corr;
    }
    let series = b[1..].to_vec();
    let cumulants: Vec<C64> = (1..=order).map(|n| kappa[n] / fact(n)).collect();
    let max_diff = series.iter().zip(&cumulants).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    Ok(LogMoments { series, cumulants, max_diff })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wedge_signs() {
        let g = |i| GrassmannElement::generator(4, i).unwrap();
        let ab = g(0).wedge(&g(1)).unwrap();
        let ba = g(1).wedge(&g(0)).unwrap();
        assert_eq!(ab.add(&ba).unwrap().len(), 0);
        assert!(g(2).wedge(&g(2)).unwrap().is_empty());
    }

    #[test]
    fn pfaffian_four() {
        let v = [0.3, -1.2, 0.7, 2.1, 0.4, -0.9];
        let mut a = DMatrix::<C64>::zeros(4, 4);
        let mut k = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                a[(i, j)] = C64::from(v[k]);
                a[(j, i)] = -C64::from(v[k]);
                k += 1;
            }
        }
        let want = v[0] * v[5] - v[1] * v[4] + v[2] * v[3];
        assert!((pfaffian(a) - want).norm() < 1e-14);
    }

    #[test]
    fn series_matches_grassmann_at_small_h() {
        let p = ModelParams { l: 1, beta: 1.0, theta: 1.0, u: -0.3, gamma: 0.2, ..Default::default() };
        let r = partition_via_grassmann(&p, 2.0, [C64::from(0.1), C64::from(0.0)]).unwrap();
        assert!(r.coefficient_err < 1e-12, "{r:?}");
        assert!((r.integral - r.p_unconstrained).norm() < 1e-12, "{r:?}");
    }
}
