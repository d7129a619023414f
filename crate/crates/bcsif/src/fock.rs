//! Exact small-lattice oracle: fermionic Fock-space operators, traces of
//! non-Hermitian exponentials, time-ordered two-point functions and the
//! Hubbard–Stratonovich quadrature over the auxiliary fields `φ` and `ξ`.
//!
//! Modes are ordered site-major: mode `2·site + σ` with `σ = 0` for `↑` (or
//! band 1) and `σ = 1` for `↓` (or band 2). Every parity sign derives from
//! this order, `a_i |n⟩ = (−1)^{#occupied modes below i} |n − e_i⟩`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::BandPoint;
use crate::error::{Error, Result};
use crate::model::{lattice_dispersions, ModelParams};

/// Largest number of single-particle modes.
pub const MAX_MODES: usize = 16;
/// Largest dimension handled as one dense matrix.
pub const MAX_DENSE_DIM: usize = 4096;

/// A Fock space over `modes` single-particle modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    pub modes: usize,
}

impl FockSpace {
    pub fn new(modes: usize) -> Result<Self> {
        if modes > MAX_MODES {
            return Err(Error::Capacity {
                what: "Fock space dimension".into(),
                required: 1usize << modes.min(63),
                cap: 1 << MAX_MODES,
            });
        }
        Ok(FockSpace { modes })
    }

    /// Fock space of the lattice `Γ` with two flavours per site.
    pub fn for_lattice(params: &ModelParams) -> Result<Self> {
        FockSpace::new(2 * params.volume())
    }

    pub fn dim(&self) -> usize {
        1 << self.modes
    }

    /// Dense matrix of `op` on the whole space.
    pub fn dense(&self, op: &Operator) -> Result<DMatrix<C64>> {
        if self.dim() > MAX_DENSE_DIM {
            return Err(Error::Capacity { what: "dense operator".into(), required: self.dim(), cap: MAX_DENSE_DIM });
        }
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for col in 0..self.dim() as u32 {
            for (row, v) in op.apply(col) {
                m[(row as usize, col as usize)] += v;
            }
        }
        Ok(m)
    }
}

/// Mode index of `(site, σ)`; `up` selects `↑`.
pub fn spin_mode(site: usize, up: bool) -> usize {
    2 * site + usize::from(!up)
}

/// Mode index of `(band, site)` with `band ∈ {1,2}`.
pub fn band_mode(site: usize, band: u8) -> usize {
    2 * site + usize::from(band == 2)
}

/// One elementary operator `a_i` (`creation = false`) or `a_i^*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub creation: bool,
}

pub fn cre(mode: usize) -> Ladder {
    Ladder { mode, creation: true }
}

pub fn ann(mode: usize) -> Ladder {
    Ladder { mode, creation: false }
}

/// A coefficient times an ordered product of ladder operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: C64,
    pub ops: Vec<Ladder>,
}

/// A finite sum of [`Term`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Operator {
    pub terms: Vec<Term>,
}

impl Operator {
    pub fn zero() -> Self {
        Operator::default()
    }

    pub fn identity() -> Self {
        Operator::term(C64::from(1.0), vec![])
    }

    pub fn term(coeff: impl Into<C64>, ops: Vec<Ladder>) -> Self {
        Operator { terms: vec![Term { coeff: coeff.into(), ops }] }
    }

    pub fn push(&mut self, coeff: impl Into<C64>, ops: Vec<Ladder>) {
        self.terms.push(Term { coeff: coeff.into(), ops });
    }

    pub fn scaled(&self, c: impl Into<C64>) -> Self {
        let c = c.into();
        Operator { terms: self.terms.iter().map(|t| Term { coeff: t.coeff * c, ops: t.ops.clone() }).collect() }
    }

    pub fn plus(&self, other: &Operator) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Operator { terms }
    }

    /// Operator product `self · other`.
    pub fn times(&self, other: &Operator) -> Self {
        let mut out = Operator::zero();
        for a in &self.terms {
            for b in &other.terms {
                let mut ops = a.ops.clone();
                ops.extend(b.ops.iter().copied());
                out.push(a.coeff * b.coeff, ops);
            }
        }
        out
    }

    /// Hermitian adjoint.
    pub fn adjoint(&self) -> Self {
        Operator {
            terms: self
                .terms
                .iter()
                .map(|t| Term {
                    coeff: t.coeff.conj(),
                    ops: t.ops.iter().rev().map(|l| Ladder { mode: l.mode, creation: !l.creation }).collect(),
                })
                .collect(),
        }
    }

    /// `op |state⟩` as a list of `(basis state, amplitude)`.
    pub fn apply(&self, state: u32) -> Vec<(u32, C64)> {
        self.terms.iter().filter_map(|t| apply_term(&t.ops, state).map(|(s, sign)| (s, t.coeff * sign))).collect()
    }
}

fn apply_term(ops: &[Ladder], mut state: u32) -> Option<(u32, f64)> {
    let mut sign = 1.0;
    for l in ops.iter().rev() {
        let bit = 1u32 << l.mode;
        if (state & bit != 0) == l.creation {
            return None;
        }
        if (state & (bit - 1)).count_ones() % 2 == 1 {
            sign = -sign;
        }
        state ^= bit;
    }
    Some((state, sign))
}

/// Basis states grouped by a conserved quantity.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    pub sectors: Vec<Vec<u32>>,
    keys: Vec<i32>,
    position: Vec<(usize, usize)>,
}

impl SectorBasis {
    pub fn new(space: FockSpace, key: impl Fn(u32) -> i32) -> Self {
        let mut keys: Vec<i32> = (0..space.dim() as u32).map(&key).collect();
        keys.sort_unstable();
        keys.dedup();
        let mut sectors = vec![Vec::new(); keys.len()];
        let mut position = vec![(0, 0); space.dim()];
        for s in 0..space.dim() as u32 {
            let b = keys.binary_search(&key(s)).unwrap();
            position[s as usize] = (b, sectors[b].len());
            sectors[b].push(s);
        }
        SectorBasis { sectors, keys, position }
    }

    /// Sectors labelled by the particle number.
    pub fn by_number(space: FockSpace) -> Self {
        SectorBasis::new(space, |s| s.count_ones() as i32)
    }

    /// Sectors labelled by `n_↑ − n_↓ = 2S_z`.
    pub fn by_spin(space: FockSpace) -> Self {
        let even = (0..16).fold(0u32, |m, i| m | (1 << (2 * i)));
        SectorBasis::new(space, move |s| (s & even).count_ones() as i32 - (s & !even).count_ones() as i32)
    }

    pub fn key(&self, sector: usize) -> i32 {
        self.keys[sector]
    }

    /// Diagonal blocks of `op`; fails if `op` connects different sectors.
    pub fn blocks(&self, op: &Operator) -> Result<Vec<DMatrix<C64>>> {
        let mut out: Vec<DMatrix<C64>> = self.sectors.iter().map(|s| DMatrix::zeros(s.len(), s.len())).collect();
        for (b, states) in self.sectors.iter().enumerate() {
            for (j, &s) in states.iter().enumerate() {
                for (t, v) in op.apply(s) {
                    let (bt, i) = self.position[t as usize];
                    if bt != b {
                        if v.norm() == 0.0 {
                            continue;
                        }
                        return Err(Error::Domain("operator does not conserve the sector label".into()));
                    }
                    out[b][(i, j)] += v;
                }
            }
        }
        Ok(out)
    }
}

/// `Tr e^{−βK}` of a dense matrix.
pub fn trace_exp(k: &DMatrix<C64>, beta: f64) -> Result<C64> {
    finite(k)?;
    let z = (k * C64::from(-beta)).exp().trace();
    check(z)
}

fn finite(m: &DMatrix<C64>) -> Result<()> {
    if m.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical("non-finite matrix entry".into()))
    }
}

fn check(z: C64) -> Result<C64> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(z)
    } else {
        Err(Error::Numerical("trace overflowed".into()))
    }
}

/// `Tr(e^{−βK} A)` summed over sector blocks; `A = 1` when `insertion` is `None`.
pub fn block_trace(k: &[DMatrix<C64>], beta: f64, insertion: Option<&[DMatrix<C64>]>) -> Result<C64> {
    let mut z = C64::from(0.0);
    for (b, kb) in k.iter().enumerate() {
        if kb.nrows() == 0 {
            continue;
        }
        if kb.nrows() == 1 {
            let e = (-beta * kb[(0, 0)]).exp();
            z += insertion.map_or(e, |a| e * a[b][(0, 0)]);
            continue;
        }
        let e = (kb * C64::from(-beta)).exp();
        z += match insertion {
            None => e.trace(),
            Some(a) => (e * &a[b]).trace(),
        };
    }
    check(z)
}

fn lincomb(parts: &[(C64, &Vec<DMatrix<C64>>)]) -> Vec<DMatrix<C64>> {
    let mut out = parts[0].1.clone();
    for m in out.iter_mut() {
        *m *= parts[0].0;
    }
    for (c, p) in &parts[1..] {
        for (o, m) in out.iter_mut().zip(p.iter()) {
            *o += m * *c;
        }
    }
    out
}

/// Literal nearest-neighbour hopping list `(x, y, t_xy)`: both `x ± e_j`
/// terms are kept, so `L = 2` double-counts and `L = 1` folds onto the site.
fn hopping(params: &ModelParams) -> Vec<(usize, usize, f64)> {
    let sign = if params.hop == 0 { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    for x in 0..params.volume() {
        for j in 0..params.d {
            out.push((x, params.neighbour(x, j, true), sign));
            out.push((x, params.neighbour(x, j, false), sign));
        }
        out.push((x, x, -params.mu));
    }
    out
}

/// `|U|^{1/2} β^{−1/2} L^{−d/2}`, the width of the auxiliary-field Gaussian.
pub fn field_scale(params: &ModelParams) -> f64 {
    (params.abs_u() / (params.beta * params.volume() as f64)).sqrt()
}

/// Operators of the spin model on `F_f(L²(Γ × {↑,↓}))`.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub space: FockSpace,
    pub h0: Operator,
    pub v: Operator,
    pub f: Operator,
    pub sz: Operator,
    /// `ψ*_{x̂↑}ψ*_{x̂↓}`.
    pub a1: Operator,
    /// `ψ*_{x̂↑}ψ*_{x̂↓}ψ_{ŷ↓}ψ_{ŷ↑}`, present only when `ŷ` is set.
    pub a2: Option<Operator>,
    /// `|U|^{1/2}β^{−1/2}L^{−d/2} Σ_x ψ*_{x↑}ψ*_{x↓}`.
    pub v_plus: Operator,
    /// `|U|^{1/2}β^{−1/2}L^{−d/2} Σ_x ψ_{x↓}ψ_{x↑}`.
    pub v_minus: Operator,
    pub number: Operator,
}

impl SpinOperators {
    /// `H = H_0 + V`.
    pub fn h(&self) -> Operator {
        self.h0.plus(&self.v)
    }

    pub fn w_plus(&self) -> Operator {
        self.v_plus.scaled(C64::i())
    }

    pub fn w_minus(&self) -> Operator {
        self.v_minus.scaled(C64::i())
    }
}

/// Assembles the spin-model operators.
pub fn build_spin_operators(params: &ModelParams) -> Result<SpinOperators> {
    let space = FockSpace::for_lattice(params)?;
    let n = params.volume();
    let mut h0 = Operator::zero();
    let mut number = Operator::zero();
    let mut sz = Operator::zero();
    for (x, y, t) in hopping(params) {
        for up in [true, false] {
            h0.push(t, vec![cre(spin_mode(x, up)), ann(spin_mode(y, up))]);
        }
    }
    for x in 0..n {
        for up in [true, false] {
            let m = spin_mode(x, up);
            number.push(1.0, vec![cre(m), ann(m)]);
            sz.push(if up { 0.5 } else { -0.5 }, vec![cre(m), ann(m)]);
        }
    }
    let pair_cre = |x: usize| vec![cre(spin_mode(x, true)), cre(spin_mode(x, false))];
    let pair_ann = |x: usize| vec![ann(spin_mode(x, false)), ann(spin_mode(x, true))];
    let mut v = Operator::zero();
    for x in 0..n {
        for y in 0..n {
            let mut ops = pair_cre(x);
            ops.extend(pair_ann(y));
            v.push(params.u / n as f64, ops);
        }
    }
    let mut f = Operator::zero();
    let mut v_plus = Operator::zero();
    let mut v_minus = Operator::zero();
    let c = field_scale(params);
    for x in 0..n {
        f.push(params.gamma, pair_cre(x));
        f.push(params.gamma, pair_ann(x));
        v_plus.push(c, pair_cre(x));
        v_minus.push(c, pair_ann(x));
    }
    let xh = params.xhat_index();
    let a1 = Operator::term(1.0, pair_cre(xh));
    let a2 = params.yhat_index().map(|yh| {
        let mut ops = pair_cre(xh);
        ops.extend(pair_ann(yh));
        Operator::term(1.0, ops)
    });
    Ok(SpinOperators { space, h0, v, f, sz, a1, a2, v_plus, v_minus, number })
}

/// Operators of the two-band model on `F_f(L²({1,2} × Γ))` at field `φ`.
#[derive(Debug, Clone)]
pub struct BandOperators {
    pub space: FockSpace,
    /// `H_0(φ)`, non-Hermitian through `(iθ/2)N`.
    pub h0: Operator,
    pub v: Operator,
    /// `ψ*_{1x̂}ψ_{2x̂}`.
    pub a1: Operator,
    /// `−ψ*_{1x̂}ψ*_{2ŷ}ψ_{2x̂}ψ_{1ŷ}`, present only when `ŷ` is set.
    pub a2: Option<Operator>,
    /// `i|U|^{1/2}β^{−1/2}L^{−d/2} Σ_x ψ*_{1x}ψ_{2x}`.
    pub w_plus: Operator,
    /// `i|U|^{1/2}β^{−1/2}L^{−d/2} Σ_x ψ*_{2x}ψ_{1x}`.
    pub w_minus: Operator,
    pub number: Operator,
}

/// The parts of `H_0(φ)`: `(iθ/2)N + Σ t_xy(ψ*_{1x}ψ_{1y} − ψ*_{2x}ψ_{2y})`,
/// `Σ_x ψ*_{1x}ψ_{2x}` and `Σ_x ψ*_{2x}ψ_{1x}`.
fn band_free_parts(params: &ModelParams) -> (Operator, Operator, Operator) {
    let mut diag = Operator::zero();
    for (x, y, t) in hopping(params) {
        diag.push(t, vec![cre(band_mode(x, 1)), ann(band_mode(y, 1))]);
        diag.push(-t, vec![cre(band_mode(x, 2)), ann(band_mode(y, 2))]);
    }
    let mut plus = Operator::zero();
    let mut minus = Operator::zero();
    for x in 0..params.volume() {
        for b in [1, 2] {
            let m = band_mode(x, b);
            diag.push(C64::new(0.0, params.theta / 2.0), vec![cre(m), ann(m)]);
        }
        plus.push(1.0, vec![cre(band_mode(x, 1)), ann(band_mode(x, 2))]);
        minus.push(1.0, vec![cre(band_mode(x, 2)), ann(band_mode(x, 1))]);
    }
    (diag, plus, minus)
}

/// Assembles the two-band operators at field `φ`.
pub fn build_band_operators(params: &ModelParams, phi: C64) -> Result<BandOperators> {
    let space = FockSpace::for_lattice(params)?;
    let n = params.volume();
    let (diag, plus, minus) = band_free_parts(params);
    let h0 = diag.plus(&plus.scaled(phi)).plus(&minus.scaled(phi.conj()));
    let un = params.u / n as f64;
    let mut v = Operator::zero();
    let mut number = Operator::zero();
    for x in 0..n {
        v.push(un, vec![cre(band_mode(x, 1)), ann(band_mode(x, 1))]);
        for b in [1, 2] {
            number.push(1.0, vec![cre(band_mode(x, b)), ann(band_mode(x, b))]);
        }
        for y in 0..n {
            v.push(-un, vec![cre(band_mode(x, 1)), cre(band_mode(y, 2)), ann(band_mode(x, 2)), ann(band_mode(y, 1))]);
        }
    }
    let ic = C64::new(0.0, field_scale(params));
    let xh = params.xhat_index();
    let a1 = Operator::term(1.0, vec![cre(band_mode(xh, 1)), ann(band_mode(xh, 2))]);
    let a2 = params.yhat_index().map(|yh| {
        Operator::term(
            -1.0,
            vec![cre(band_mode(xh, 1)), cre(band_mode(yh, 2)), ann(band_mode(xh, 2)), ann(band_mode(yh, 1))],
        )
    });
    Ok(BandOperators { space, h0, v, a1, a2, w_plus: plus.scaled(ic), w_minus: minus.scaled(ic), number })
}

/// `Π_k (1 + 2cos(βθ/2)e^{−βe(k)} + e^{−2βe(k)})`.
pub fn spin_free_product(params: &ModelParams) -> f64 {
    let (beta, c) = (params.beta, params.cos_half());
    lattice_dispersions(params)
        .iter()
        .map(|e| {
            let y = (-beta * e).exp();
            1.0 + 2.0 * c * y + y * y
        })
        .product()
}

/// `Π_k Π_{δ=±1} (1 + e^{−β(iθ/2 + δ√(e(k)²+|φ|²))})`.
pub fn band_free_product(params: &ModelParams, phi: C64) -> C64 {
    let beta = params.beta;
    lattice_dispersions(params)
        .iter()
        .map(|e| {
            let big_e = (e * e + phi.norm_sqr()).sqrt();
            [1.0, -1.0]
                .iter()
                .map(|d| C64::from(1.0) + (-beta * C64::new(d * big_e, params.theta / 2.0)).exp())
                .product::<C64>()
        })
        .product()
}

/// `B(φ) = Π_k (cos(βθ/2) + cosh β√(e(k)²+|φ|²)) / Π_k (cos(βθ/2) + cosh βe(k))`.
pub fn b_factor(params: &ModelParams, phi: C64) -> f64 {
    let (beta, c) = (params.beta, params.cos_half());
    lattice_dispersions(params)
        .iter()
        .map(|e| (c + (beta * (e * e + phi.norm_sqr()).sqrt()).cosh()) / (c + (beta * e).cosh()))
        .product()
}

/// A trace evaluated two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionCheck {
    pub trace: C64,
    pub product: C64,
    pub abs_err: f64,
    pub rel_err: f64,
}

impl PartitionCheck {
    fn new(trace: C64, product: C64) -> Self {
        let abs_err = (trace - product).norm();
        PartitionCheck { trace, product, abs_err, rel_err: abs_err / product.norm() }
    }
}

/// `Tr e^{−β(H_0 + iθS_z)}` against its momentum product.
pub fn free_partition_check(params: &ModelParams) -> Result<PartitionCheck> {
    let ops = build_spin_operators(params)?;
    let basis = SectorBasis::by_spin(ops.space);
    let k = basis.blocks(&ops.h0.plus(&ops.sz.scaled(C64::new(0.0, params.theta))))?;
    let trace = block_trace(&k, params.beta, None)?;
    Ok(PartitionCheck::new(trace, C64::from(spin_free_product(params))))
}

/// `Tr e^{−βH_0(φ)}` against its momentum product.
pub fn band_partition_check(params: &ModelParams, phi: C64) -> Result<PartitionCheck> {
    let ops = build_band_operators(params, phi)?;
    let basis = SectorBasis::by_number(ops.space);
    let trace = block_trace(&basis.blocks(&ops.h0)?, params.beta, None)?;
    Ok(PartitionCheck::new(trace, band_free_product(params, phi)))
}

/// Traces `Tr e^{−β(H + iθS_z + F)}` and its insertions, at a given `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinTraces {
    pub z: C64,
    pub a1: C64,
    pub a1_adjoint: C64,
    pub a2: Option<C64>,
}

/// The spin-model traces at field `theta` (not restricted to `[0, 2π/β)`).
pub fn spin_traces(params: &ModelParams, theta: f64) -> Result<SpinTraces> {
    let ops = build_spin_operators(params)?;
    let basis = SectorBasis::by_spin(ops.space);
    let k = ops.h().plus(&ops.sz.scaled(C64::new(0.0, theta))).plus(&ops.f);
    let k = basis.blocks(&k)?;
    let tr = |a: &Operator| -> Result<C64> { block_trace(&k, params.beta, Some(&basis.blocks(a)?)) };
    Ok(SpinTraces {
        z: block_trace(&k, params.beta, None)?,
        a1: tr(&ops.a1)?,
        a1_adjoint: tr(&ops.a1.adjoint())?,
        a2: ops.a2.as_ref().map(tr).transpose()?,
    })
}

/// Reality and `θ`-periodicity of the spin-model traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealityReport {
    /// `max |Im| / |Re|` over the plain, `A_1` and `A_2` traces.
    pub max_imag_ratio: f64,
    /// `|Tr(…A_1) − Tr(…A_1^*)|`, relative to `|Tr(…A_1)|` when nonzero.
    pub adjoint_err: f64,
    /// Largest relative change under `θ ↦ θ + 4π/β`.
    pub shift_err: f64,
    /// Largest relative difference between `θ₂ ∈ (2π/β, 4π/β)` and `|θ₂ − 4π/β|`.
    pub reflection_err: f64,
    pub pass: bool,
}

fn rel(a: C64, b: C64) -> f64 {
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

fn traces_rel(a: &SpinTraces, b: &SpinTraces) -> f64 {
    let mut m = rel(a.z, b.z).max(rel(a.a1, b.a1)).max(rel(a.a1_adjoint, b.a1_adjoint));
    if let (Some(x), Some(y)) = (a.a2, b.a2) {
        m = m.max(rel(x, y));
    }
    m
}

/// Checks that the traces are real, that the `A_1` and `A_1^*` insertions
/// agree, and that the traces depend on `θ` only through `|θ'|`, where
/// `θ' ≡ θ mod 4π/β` and `θ' ∈ (−2π/β, 2π/β]`.
pub fn reality_periodicity_check(params: &ModelParams) -> Result<RealityReport> {
    if !(0.0..=1.0).contains(&params.gamma) {
        return Err(Error::validation("gamma", "must lie in [0, 1]"));
    }
    let period = 4.0 * PI / params.beta;
    let t = spin_traces(params, params.theta)?;
    let imag = |z: C64| if z.re == 0.0 { z.im.abs() } else { z.im.abs() / z.re.abs() };
    let mut max_imag_ratio = imag(t.z).max(imag(t.a1)).max(imag(t.a1_adjoint));
    if let Some(a2) = t.a2 {
        max_imag_ratio = max_imag_ratio.max(imag(a2));
    }
    let adjoint_err = rel(t.a1, t.a1_adjoint);
    let shifted = spin_traces(params, params.theta + period)?;
    let shift_err = traces_rel(&t, &shifted);
    let theta2 = period / 2.0 + (params.theta + 0.1) % (period / 2.0);
    let reflected = spin_traces(params, theta2)?;
    let direct = spin_traces(params, (theta2 - period).abs())?;
    let reflection_err = traces_rel(&reflected, &direct);
    let tol = 1e-9;
    let pass = max_imag_ratio < tol && adjoint_err < tol && shift_err < tol && reflection_err < tol;
    Ok(RealityReport { max_imag_ratio, adjoint_err, shift_err, reflection_err, pass })
}

/// Time-ordered `Tr(e^{−βK} T ψ*_a(s) ψ_b(t)) / Tr e^{−βK}` with
/// `ψ^{(*)}(s) = e^{sK}ψ^{(*)}e^{−sK}` and the `s < t` branch `−ψ_b(t)ψ*_a(s)`.
pub fn time_ordered(
    k: &DMatrix<C64>,
    beta: f64,
    creator: &DMatrix<C64>,
    annihilator: &DMatrix<C64>,
    s: f64,
    t: f64,
) -> Result<C64> {
    finite(k)?;
    let tau = (s - t).abs();
    let outer = (k * C64::from(-(beta - tau))).exp();
    let inner = (k * C64::from(-tau)).exp();
    let z = (k * C64::from(-beta)).exp().trace();
    let num = if s >= t {
        (outer * creator * inner * annihilator).trace()
    } else {
        -(outer * annihilator * inner * creator).trace()
    };
    check(num / z)
}

fn check_time(params: &ModelParams, s: f64) -> Result<()> {
    if s >= 0.0 && s < params.beta {
        Ok(())
    } else {
        Err(Error::validation("s", "time must lie in [0, β)"))
    }
}

/// `C(φ)(X, Y)` from its trace definition with `H_0(φ)`.
pub fn covariance_from_traces(params: &ModelParams, phi: C64, x: &BandPoint, y: &BandPoint) -> Result<C64> {
    check_time(params, x.s)?;
    check_time(params, y.s)?;
    let ops = build_band_operators(params, phi)?;
    let k = ops.space.dense(&ops.h0)?;
    let mx = band_mode(params.site_index(&x.x), x.band);
    let my = band_mode(params.site_index(&y.x), y.band);
    let c = ops.space.dense(&Operator::term(1.0, vec![cre(mx)]))?;
    let a = ops.space.dense(&Operator::term(1.0, vec![ann(my)]))?;
    time_ordered(&k, params.beta, &c, &a, x.s, y.s)
}

/// A point `(x, σ, s)` of `Γ × {↑,↓} × [0, β)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinPoint {
    pub x: Vec<i64>,
    pub up: bool,
    pub s: f64,
}

/// The free spin two-point function `G(X, Y)` from its trace definition with `H_0 + iθS_z`.
pub fn spin_covariance_from_traces(params: &ModelParams, x: &SpinPoint, y: &SpinPoint) -> Result<C64> {
    check_time(params, x.s)?;
    check_time(params, y.s)?;
    let ops = build_spin_operators(params)?;
    let k = ops.space.dense(&ops.h0.plus(&ops.sz.scaled(C64::new(0.0, params.theta))))?;
    let c = ops.space.dense(&Operator::term(1.0, vec![cre(spin_mode(params.site_index(&x.x), x.up))]))?;
    let a = ops.space.dense(&Operator::term(1.0, vec![ann(spin_mode(params.site_index(&y.x), y.up))]))?;
    time_ordered(&k, params.beta, &c, &a, x.s, y.s)
}

/// Both sides of the spin-to-band partition identity at fields `(φ, ξ)` and couplings `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: C64,
    pub rhs: C64,
    pub abs_err: f64,
    pub rel_err: f64,
}

/// `Tr e^{−β(H+iθS_z+F+A−φV_+−φ̄V_−−ξW_+−ξ̄W_−)} / Tr e^{−β(H_0+iθS_z)}` against
/// `B(φ')·Tr e^{−β(H_0(φ')+V+A−ξW_+−ξ̄W_−)} / Tr e^{−βH_0(φ')}`, `φ' = γ − |U|^{1/2}β^{−1/2}L^{−d/2}φ`.
pub fn partition_equality_inside(params: &ModelParams, phi: C64, xi: C64, lambda: [C64; 2]) -> Result<IdentityCheck> {
    let spin = build_spin_operators(params)?;
    let mut a_spin = spin.a1.scaled(lambda[0]);
    if let Some(a2) = &spin.a2 {
        a_spin = a_spin.plus(&a2.scaled(lambda[1]));
    }
    let sz = spin.sz.scaled(C64::new(0.0, params.theta));
    let k_spin = spin
        .h()
        .plus(&sz)
        .plus(&spin.f)
        .plus(&a_spin)
        .plus(&spin.v_plus.scaled(-phi))
        .plus(&spin.v_minus.scaled(-phi.conj()))
        .plus(&spin.w_plus().scaled(-xi))
        .plus(&spin.w_minus().scaled(-xi.conj()));
    let sb = SectorBasis::by_spin(spin.space);
    let lhs = block_trace(&sb.blocks(&k_spin)?, params.beta, None)? / spin_free_product(params);

    let phi_p = C64::from(params.gamma) - field_scale(params) * phi;
    let band = build_band_operators(params, phi_p)?;
    let mut a_band = band.a1.scaled(lambda[0]);
    if let Some(a2) = &band.a2 {
        a_band = a_band.plus(&a2.scaled(lambda[1]));
    }
    let k_band =
        band.h0.plus(&band.v).plus(&a_band).plus(&band.w_plus.scaled(-xi)).plus(&band.w_minus.scaled(-xi.conj()));
    let nb = SectorBasis::by_number(band.space);
    let rhs = b_factor(params, phi_p) * block_trace(&nb.blocks(&k_band)?, params.beta, None)?
        / band_free_product(params, phi_p);
    let abs_err = (lhs - rhs).norm();
    Ok(IdentityCheck { lhs, rhs, abs_err, rel_err: abs_err / lhs.norm() })
}

/// Which ratio the auxiliary-field quadrature evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Insertion {
    None,
    A1,
    A2,
}

/// Result of the four-fold Gauss–Hermite quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HsEstimate {
    pub value: C64,
    /// Weighted mass on the outermost node of either axis, relative to the total.
    pub tail: f64,
    pub phi_nodes: usize,
    pub xi_nodes: usize,
}

/// Largest admissible relative tail mass.
pub const HS_TAIL_TOL: f64 = 1e-8;

fn hermite(n: usize) -> Result<Vec<(f64, f64)>> {
    let n = NonZeroUsize::new(n).ok_or_else(|| Error::validation("nodes", "must be positive"))?;
    Ok(GaussHermite::new(n).iter().map(|(x, w)| (*x, *w)).collect())
}

fn hs_quadrature(params: &ModelParams, insertion: Insertion, phi_nodes: usize, xi_nodes: usize) -> Result<HsEstimate> {
    params.validate()?;
    if phi_nodes < 24 || xi_nodes < 24 {
        return Err(Error::validation("nodes", "at least 24 quadrature nodes per axis are required"));
    }
    let zero = build_band_operators(params, C64::from(0.0))?;
    if zero.space.dim() > 256 {
        return Err(Error::Capacity { what: "two-band Fock space".into(), required: zero.space.dim(), cap: 256 });
    }
    let basis = SectorBasis::by_number(zero.space);
    let (diag, plus, minus) = band_free_parts(params);
    let diag = basis.blocks(&diag.plus(&zero.v))?;
    let plus = basis.blocks(&plus)?;
    let minus = basis.blocks(&minus)?;
    let wp = basis.blocks(&zero.w_plus)?;
    let wm = basis.blocks(&zero.w_minus)?;
    let ins = match insertion {
        Insertion::None => None,
        Insertion::A1 => Some(basis.blocks(&zero.a1)?),
        Insertion::A2 => {
            let a2 = zero.a2.as_ref().ok_or_else(|| Error::validation("yhat", "A_2 requires ŷ"))?;
            Some(basis.blocks(a2)?)
        }
    };
    let gp = hermite(phi_nodes)?;
    let gx = hermite(xi_nodes)?;
    let sigma = field_scale(params);
    let beta = params.beta;
    let phi_grid: Vec<(usize, usize)> = (0..phi_nodes).flat_map(|i| (0..phi_nodes).map(move |j| (i, j))).collect();
    let rows: Vec<Result<(C64, f64)>> = phi_grid
        .par_iter()
        .map(|&(i, j)| {
            let phi = C64::new(params.gamma + sigma * gp[i].0, sigma * gp[j].0);
            let wphi = gp[i].1 * gp[j].1 / PI;
            let prefactor = b_factor(params, phi) / band_free_product(params, phi);
            let one = C64::from(1.0);
            let base = lincomb(&[(one, &diag), (phi, &plus), (phi.conj(), &minus)]);
            let mut sum = C64::from(0.0);
            let mut edge = 0.0;
            for (p, &(u, wu)) in gx.iter().enumerate() {
                for (q, &(v, wv)) in gx.iter().enumerate() {
                    let xi = C64::new(u, v);
                    let k = lincomb(&[(one, &base), (-xi, &wp), (-xi.conj(), &wm)]);
                    let tr = block_trace(&k, beta, ins.as_deref())?;
                    let term = tr * (wu * wv / PI);
                    sum += term;
                    if p == 0 || q == 0 || p + 1 == xi_nodes || q + 1 == xi_nodes {
                        edge += term.norm();
                    }
                }
            }
            let on_edge = i == 0 || j == 0 || i + 1 == phi_nodes || j + 1 == phi_nodes;
            let total = prefactor * wphi * sum;
            let edge = if on_edge { total.norm() } else { (prefactor * wphi).norm() * edge };
            Ok((total, edge))
        })
        .collect();
    let mut value = C64::from(0.0);
    let mut edge = 0.0;
    for r in rows {
        let (v, e) = r?;
        value += v;
        edge += e;
    }
    let value = check(value)?;
    let tail = edge / value.norm();
    if !(tail < HS_TAIL_TOL) {
        return Err(Error::Numerical(format!("auxiliary-field quadrature tail {tail:.3e} too large")));
    }
    Ok(HsEstimate { value, tail, phi_nodes, xi_nodes })
}

/// Auxiliary-field representation of `Tr e^{−β(H+iθS_z+F)} / Tr e^{−β(H_0+iθS_z)}`:
/// Gaussian `φ`-average (centred at `γ`, width `|U|^{1/2}β^{−1/2}L^{−d/2}`) of
/// `B(φ)` times the Gaussian `ξ`-average of `Tr e^{−β(H_0(φ)+V−ξW_+−ξ̄W_−)} / Tr e^{−βH_0(φ)}`.
pub fn hs_partition(params: &ModelParams, phi_nodes: usize, xi_nodes: usize) -> Result<HsEstimate> {
    hs_quadrature(params, Insertion::None, phi_nodes, xi_nodes)
}

/// Auxiliary-field representation of `Tr(e^{−β(H+iθS_z+F)}A_j) / Tr e^{−β(H_0+iθS_z)}`
/// with the band images `A^1 = ψ*_{1x̂}ψ_{2x̂}`, `A^2 = −ψ*_{1x̂}ψ*_{2ŷ}ψ_{2x̂}ψ_{1ŷ}`.
pub fn hs_correlation(params: &ModelParams, j: u8, phi_nodes: usize, xi_nodes: usize) -> Result<HsEstimate> {
    let insertion = match j {
        1 => Insertion::A1,
        2 => Insertion::A2,
        _ => return Err(Error::validation("j", "must be 1 or 2")),
    };
    hs_quadrature(params, insertion, phi_nodes, xi_nodes)
}

/// Exact `Tr(e^{−β(H+iθS_z+F)}·A) / Tr e^{−β(H_0+iθS_z)}` for the given insertion.
pub fn exact_ratio(params: &ModelParams, insertion: Insertion) -> Result<C64> {
    let t = spin_traces(params, params.theta)?;
    let num = match insertion {
        Insertion::None => t.z,
        Insertion::A1 => t.a1,
        Insertion::A2 => t.a2.ok_or_else(|| Error::validation("yhat", "A_2 requires ŷ"))?,
    };
    Ok(num / spin_free_product(params))
}

/// Observables for [`thermal_expectation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Observable {
    A1,
    A1Adjoint,
    A2,
}

/// `Tr(e^{−β(H+iθS_z+F)}O) / Tr e^{−β(H+iθS_z+F)}` by Hermitian diagonalization
/// of `H + F` in each `S_z` block, the field contributing the phase `e^{−iβθm/2}`.
pub fn thermal_expectation(params: &ModelParams, observable: Observable) -> Result<C64> {
    params.validate()?;
    let ops = build_spin_operators(params)?;
    if ops.space.dim() > MAX_DENSE_DIM {
        return Err(Error::Capacity { what: "spin Fock space".into(), required: ops.space.dim(), cap: MAX_DENSE_DIM });
    }
    let obs = match observable {
        Observable::A1 => ops.a1.clone(),
        Observable::A1Adjoint => ops.a1.adjoint(),
        Observable::A2 => ops.a2.clone().ok_or_else(|| Error::validation("yhat", "A_2 requires ŷ"))?,
    };
    let basis = SectorBasis::by_spin(ops.space);
    let hf = basis.blocks(&ops.h().plus(&ops.f))?;
    let ob = basis.blocks(&obs)?;
    let eig: Vec<SymmetricEigen<f64, nalgebra::Dyn>> =
        hf.iter().map(|m| SymmetricEigen::new(m.map(|v| v.re))).collect();
    let shift = eig.iter().flat_map(|e| e.eigenvalues.iter().copied()).fold(f64::INFINITY, f64::min);
    let mut z = C64::from(0.0);
    let mut num = C64::from(0.0);
    for (b, e) in eig.iter().enumerate() {
        let m = basis.key(b) as f64;
        let phase = C64::from_polar(1.0, -params.beta * params.theta * m / 2.0);
        let v = e.eigenvectors.map(C64::from);
        let rotated = v.transpose() * &ob[b] * &v;
        for (i, w) in e.eigenvalues.iter().enumerate() {
            let boltz = (-params.beta * (w - shift)).exp();
            z += phase * boltz;
            num += phase * boltz * rotated[(i, i)];
        }
    }
    check(num / z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(l: usize) -> ModelParams {
        ModelParams { l, beta: 1.0, theta: 1.7, u: -0.5, gamma: 0.4, ..Default::default() }
    }

    #[test]
    fn car_relations() {
        let space = FockSpace::new(3).unwrap();
        let a = |i| space.dense(&Operator::term(1.0, vec![ann(i)])).unwrap();
        let c = |i| space.dense(&Operator::term(1.0, vec![cre(i)])).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let anti = a(i) * c(j) + c(j) * a(i);
                let want = if i == j { DMatrix::identity(8, 8) } else { DMatrix::zeros(8, 8) };
                assert!((anti - want).norm() < 1e-15);
                assert!((a(i) * a(j) + a(j) * a(i)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn one_site_free_partition() {
        let p = ModelParams { l: 1, theta: 0.0, ..Default::default() };
        let r = free_partition_check(&p).unwrap();
        let want = (1.0 + (-2.0f64).exp()).powi(2);
        assert!((r.trace.re - want).abs() < 1e-12 && r.abs_err < 1e-12);
    }

    #[test]
    fn spin_sectors_and_traces() {
        let p = params(2);
        let r = reality_periodicity_check(&p).unwrap();
        assert!(r.pass, "{r:?}");
        let ops = build_spin_operators(&p).unwrap();
        let sz = ops.space.dense(&ops.sz).unwrap();
        let h = ops.space.dense(&ops.h()).unwrap();
        assert!((&sz * &h - &h * &sz).norm() < 1e-12);
    }

    #[test]
    fn thermal_matches_trace_route() {
        let mut p = params(2);
        p.yhat = Some(vec![1]);
        let t = spin_traces(&p, p.theta).unwrap();
        let e = thermal_expectation(&p, Observable::A1).unwrap();
        assert!((e - t.a1 / t.z).norm() < 1e-10);
        let e2 = thermal_expectation(&p, Observable::A2).unwrap();
        assert!((e2 - t.a2.unwrap() / t.z).norm() < 1e-10);
    }

    #[test]
    fn partition_identity_small() {
        let mut p = params(2);
        p.yhat = Some(vec![1]);
        let r = partition_equality_inside(
            &p,
            C64::new(0.3, -0.2),
            C64::new(-0.1, 0.4),
            [C64::new(0.2, 0.1), C64::new(-0.3, 0.05)],
        )
        .unwrap();
        assert!(r.rel_err < 1e-9, "{r:?}");
    }
}
