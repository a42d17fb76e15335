//! Exact fermionic Fock space over a handful of momenta.
//!
//! Basis states are occupation bitmasks over a fixed mode order; bit `i` is
//! mode `i`. A creation or annihilation operator on mode `i` carries the sign
//! `(−1)^(occupied modes before i)`. All operators are real, stored row-sparse.

use crate::bogo::{analyze, sym_fn, BlockData};
use crate::error::{Error, Result};
use crate::lattice::{add, dot, norm, norm2, sub, IVec3};
use crate::model::{FermiSetup, Potential, Radius};
use crate::patches::PatchDecomposition;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const DEFAULT_MODE_LIMIT: usize = 16;
pub const BOGOLIUBOV_MODE_LIMIT: usize = 14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSet {
    modes: Vec<IVec3>,
    inside: Vec<bool>,
    k_f: Radius,
}

impl ModeSet {
    /// Modes in lexicographic order.
    pub fn new(mut modes: Vec<IVec3>, k_f: Radius, limit: usize) -> Result<Self> {
        modes.sort_unstable();
        Self::with_order(modes, k_f, limit)
    }

    /// Modes in the given order; the sign convention follows it.
    pub fn with_order(modes: Vec<IVec3>, k_f: Radius, limit: usize) -> Result<Self> {
        let limit = limit.min(30);
        if modes.len() > limit {
            return Err(Error::DimensionLimit { n: modes.len(), limit });
        }
        let distinct: BTreeSet<IVec3> = modes.iter().copied().collect();
        if distinct.len() != modes.len() {
            return Err(Error::InvalidInput("duplicate momenta in mode set".into()));
        }
        let inside = modes.iter().map(|&p| k_f.contains_sq(norm2(p))).collect();
        Ok(Self { modes, inside, k_f })
    }

    /// Same momenta, with position `i` holding old mode `perm[i]`.
    pub fn reordered(&self, perm: &[usize]) -> Result<Self> {
        let modes = perm.iter().map(|&i| self.modes[i]).collect();
        Self::with_order(modes, self.k_f, self.modes.len())
    }

    pub fn n(&self) -> usize {
        self.modes.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.modes.len()
    }

    pub fn modes(&self) -> &[IVec3] {
        &self.modes
    }

    pub fn k_f(&self) -> Radius {
        self.k_f
    }

    pub fn is_inside(&self, i: usize) -> bool {
        self.inside[i]
    }

    pub fn index_of(&self, p: IVec3) -> Option<usize> {
        self.modes.iter().position(|&q| q == p)
    }

    pub fn inside_mask(&self) -> u32 {
        self.inside.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| 1u32 << i).sum()
    }

    pub fn outside_mask(&self) -> u32 {
        (((1u64 << self.n()) - 1) as u32) & !self.inside_mask()
    }

    /// Basis states with `m` occupied outside and `m` occupied inside modes.
    pub fn pair_sector(&self, m: u32) -> Vec<usize> {
        let (i, o) = (self.inside_mask(), self.outside_mask());
        (0..self.dim())
            .filter(|&s| (s as u32 & o).count_ones() == m && (s as u32 & i).count_ones() == m)
            .collect()
    }

    /// All basis states with as many outside as inside occupations.
    pub fn balanced_sector(&self) -> Vec<usize> {
        let (i, o) = (self.inside_mask(), self.outside_mask());
        (0..self.dim()).filter(|&s| (s as u32 & o).count_ones() == (s as u32 & i).count_ones()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

fn sign_below(s: u32, i: usize) -> f64 {
    if (s & ((1u32 << i) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Applies `ops[0]·ops[1]·…` to basis state `s`, rightmost factor first.
pub fn apply_ladders(ops: &[Ladder], s: u32) -> Option<(u32, f64)> {
    let mut state = s;
    let mut sign = 1.0;
    for op in ops.iter().rev() {
        match *op {
            Ladder::Create(i) => {
                if state >> i & 1 == 1 {
                    return None;
                }
                sign *= sign_below(state, i);
                state |= 1 << i;
            }
            Ladder::Annihilate(i) => {
                if state >> i & 1 == 0 {
                    return None;
                }
                sign *= sign_below(state, i);
                state &= !(1 << i);
            }
        }
    }
    Some((state, sign))
}

pub type Term = (f64, Vec<Ladder>);

fn merge_sorted(mut v: Vec<(u32, f64)>) -> Vec<(u32, f64)> {
    v.sort_by_key(|e| e.0);
    let mut out: Vec<(u32, f64)> = Vec::with_capacity(v.len());
    for (c, x) in v {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += x,
            _ => out.push((c, x)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Real square matrix on the Fock space, one sorted `(column, value)` list per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    rows: Vec<Vec<(u32, f64)>>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, rows: vec![Vec::new(); dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(vec![1.0; dim])
    }

    pub fn diagonal(d: Vec<f64>) -> Self {
        let rows = d.iter().enumerate().map(|(i, &x)| if x != 0.0 { vec![(i as u32, x)] } else { Vec::new() }).collect();
        Self { dim: d.len(), rows }
    }

    /// Builds the operator column by column; `col(s)` lists `(row, value)`.
    pub fn from_columns<F>(dim: usize, col: F) -> Self
    where
        F: Fn(usize) -> Vec<(usize, f64)> + Sync,
    {
        let cols: Vec<Vec<(usize, f64)>> = (0..dim).into_par_iter().map(&col).collect();
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); dim];
        for (c, entries) in cols.into_iter().enumerate() {
            for (r, x) in entries {
                rows[r].push((c as u32, x));
            }
        }
        let rows = rows.into_par_iter().map(merge_sorted).collect();
        Self { dim, rows }
    }

    pub fn from_terms(n_modes: usize, terms: &[Term]) -> Self {
        Self::from_columns(1 << n_modes, |s| {
            terms
                .iter()
                .filter_map(|(c, ops)| apply_ladders(ops, s as u32).map(|(t, sg)| (t as usize, c * sg)))
                .collect()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(u32, f64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        match self.rows[r].binary_search_by_key(&(c as u32), |e| e.0) {
            Ok(i) => self.rows[r][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.dim];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, x) in row {
                rows[c as usize].push((r as u32, x));
            }
        }
        Self { dim: self.dim, rows }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let rows = self
            .rows
            .par_iter()
            .map(|row| {
                let mut acc = Vec::new();
                for &(k, x) in row {
                    for &(c, y) in &other.rows[k as usize] {
                        acc.push((c, x * y));
                    }
                }
                merge_sorted(acc)
            })
            .collect();
        Self { dim: self.dim, rows }
    }

    /// `self + c·other`
    pub fn add_scaled(&self, other: &Self, c: f64) -> Self {
        assert_eq!(self.dim, other.dim);
        let rows = self
            .rows
            .par_iter()
            .zip(other.rows.par_iter())
            .map(|(a, b)| merge_sorted(a.iter().copied().chain(b.iter().map(|&(j, y)| (j, c * y))).collect()))
            .collect();
        Self { dim: self.dim, rows }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -1.0)
    }

    pub fn scale(&self, c: f64) -> Self {
        let rows = self.rows.iter().map(|r| merge_sorted(r.iter().map(|&(j, x)| (j, c * x)).collect())).collect();
        Self { dim: self.dim, rows }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        self.rows.par_iter().map(|row| row.iter().map(|&(c, x)| x * v[c as usize]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.rows.iter().map(|r| r.iter().map(|e| e.1.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().flatten().map(|e| e.1.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    /// `‖P·A·P‖_∞` for the coordinate projection `P` onto `states`.
    pub fn restricted_norm_inf(&self, states: &[usize]) -> f64 {
        let mut member = vec![false; self.dim];
        for &s in states {
            member[s] = true;
        }
        states
            .iter()
            .map(|&r| self.rows[r].iter().filter(|e| member[e.0 as usize]).map(|e| e.1.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, x) in row {
                m[(r, c as usize)] = x;
            }
        }
        m
    }
}

pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    a.mul(b).sub(&b.mul(a))
}

pub fn anticommutator(a: &SparseOperator, b: &SparseOperator) -> SparseOperator {
    a.mul(b).add(&b.mul(a))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockBasis {
    pub n: usize,
    pub dim: usize,
    pub vacuum: usize,
}

pub fn build_fock(modes: &ModeSet) -> FockBasis {
    FockBasis { n: modes.n(), dim: modes.dim(), vacuum: 0 }
}

pub fn annihilator(modes: &ModeSet, i: usize) -> SparseOperator {
    SparseOperator::from_terms(modes.n(), &[(1.0, vec![Ladder::Annihilate(i)])])
}

pub fn creator(modes: &ModeSet, i: usize) -> SparseOperator {
    SparseOperator::from_terms(modes.n(), &[(1.0, vec![Ladder::Create(i)])])
}

pub fn number_operator(modes: &ModeSet) -> SparseOperator {
    SparseOperator::diagonal((0..modes.dim()).map(|s| s.count_ones() as f64).collect())
}

/// Unit vector `e_s`.
pub fn basis_vector(dim: usize, s: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[s] = 1.0;
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarReport {
    pub n: usize,
    /// `max ‖{a_p, a_q*} − δ_pq‖_max`
    pub mixed: f64,
    /// `max ‖{a_p, a_q}‖_max`
    pub same: f64,
    /// `max_p sqrt(‖a_p‖₁‖a_p‖_∞)`, an upper bound on the operator norm.
    pub op_norm_bound: f64,
}

pub fn car_check(modes: &ModeSet) -> CarReport {
    let n = modes.n();
    let dim = modes.dim();
    let a: Vec<SparseOperator> = (0..n).map(|i| annihilator(modes, i)).collect();
    let ad: Vec<SparseOperator> = a.iter().map(SparseOperator::transpose).collect();
    let id = SparseOperator::identity(dim);
    let mut mixed = 0.0f64;
    let mut same = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            let mut m = anticommutator(&a[p], &ad[q]);
            if p == q {
                m = m.sub(&id);
            }
            mixed = mixed.max(m.max_abs());
            same = same.max(anticommutator(&a[p], &a[q]).max_abs());
        }
    }
    let op_norm_bound = a.iter().map(|x| (x.norm_inf() * x.transpose().norm_inf()).sqrt()).fold(0.0, f64::max);
    CarReport { n, mixed, same, op_norm_bound }
}

/// Particle–hole transformation `R_F = U·P_out^m·P_in^(m−1)` with
/// `U = ∏_{h inside}(a_h + a_h*)`, `m` the number of inside modes and `P_S`
/// the parity of the occupations in `S`. When the real matrix `V` so built
/// squares to `−1`, `R_F = i·V` (flag `phase_i`); conjugation by `R_F` is
/// then conjugation by `V` either way.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleHole {
    pub v: SparseOperator,
    pub phase_i: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleHoleReport {
    pub phase_i: bool,
    /// `‖R_F² − 1‖_max`
    pub involution: f64,
    /// `‖R_F − R_F*‖_max`
    pub self_adjoint: f64,
    /// `‖V^T V − 1‖_max`
    pub unitarity: f64,
    /// `max_p ‖R_F* a_p* R_F − (a_p or a_p*)‖_max`
    pub conjugation: f64,
    /// `‖R_F* 𝒩 R_F − (m − 𝒩_h + 𝒩_p)‖_max`
    pub number: f64,
    /// Sign `σ` in `R_F Ω = σ·(∏_{inside} a_p*)Ω` in mode order; 0 if not of this form.
    pub vacuum_sign: f64,
}

pub fn particle_hole_transform(modes: &ModeSet) -> ParticleHole {
    let ins: Vec<usize> = (0..modes.n()).filter(|&i| modes.is_inside(i)).collect();
    let m = ins.len() as u32;
    let (imask, omask) = (modes.inside_mask(), modes.outside_mask());
    let v = SparseOperator::from_columns(modes.dim(), |s| {
        let s = s as u32;
        let par = |mask: u32, pow: u32| -> f64 {
            if pow % 2 == 1 && (s & mask).count_ones() % 2 == 1 {
                -1.0
            } else {
                1.0
            }
        };
        // `P_in^(m−1)` with `m = 0` is `P_in^(−1) = P_in`, which is trivial on no modes.
        let mut sign = par(omask, m) * par(imask, m.wrapping_sub(1) & 1);
        let mut state = s;
        for &h in ins.iter().rev() {
            sign *= sign_below(state, h);
            state ^= 1 << h;
        }
        vec![(state as usize, sign)]
    });
    let sq = v.mul(&v);
    let phase_i = sq.get(0, 0) < 0.0;
    ParticleHole { v, phase_i }
}

impl ParticleHole {
    /// `R_F* A R_F`
    pub fn conjugate(&self, a: &SparseOperator) -> SparseOperator {
        self.v.transpose().mul(a).mul(&self.v)
    }

    pub fn report(&self, modes: &ModeSet) -> ParticleHoleReport {
        let dim = modes.dim();
        let id = SparseOperator::identity(dim);
        let vt = self.v.transpose();
        let s = if self.phase_i { -1.0 } else { 1.0 };
        let involution = self.v.mul(&self.v).scale(s).sub(&id).max_abs();
        let self_adjoint = self.v.add_scaled(&vt, -s).max_abs();
        let unitarity = vt.mul(&self.v).sub(&id).max_abs();
        let mut conjugation = 0.0f64;
        for i in 0..modes.n() {
            let ad = creator(modes, i);
            let target = if modes.is_inside(i) { ad.transpose() } else { ad.clone() };
            conjugation = conjugation.max(self.conjugate(&ad).sub(&target).max_abs());
        }
        let (imask, omask) = (modes.inside_mask(), modes.outside_mask());
        let m = imask.count_ones() as f64;
        let rhs = SparseOperator::diagonal(
            (0..dim)
                .map(|s| m - (s as u32 & imask).count_ones() as f64 + (s as u32 & omask).count_ones() as f64)
                .collect(),
        );
        let number = self.conjugate(&number_operator(modes)).sub(&rhs).max_abs();
        let col = self.v.transpose();
        let vac = col.row(0);
        let vacuum_sign = if vac.len() == 1 && vac[0].0 == imask {
            let ops: Vec<Ladder> = (0..modes.n()).filter(|&i| modes.is_inside(i)).map(Ladder::Create).collect();
            let (_, sg) = apply_ladders(&ops, 0).expect("distinct inside modes");
            vac[0].1 * sg
        } else {
            0.0
        };
        ParticleHoleReport { phase_i: self.phase_i, involution, self_adjoint, unitarity, conjugation, number, vacuum_sign }
    }
}

fn signed_kinetic(setup: &FermiSetup, p: IVec3) -> f64 {
    setup.hbar * setup.hbar * norm2(p) as f64
}

/// Excitation energy `e(p) = |ħ²p² − κ²|`.
pub fn excitation_energy(setup: &FermiSetup, p: IVec3) -> f64 {
    (signed_kinetic(setup, p) - setup.kappa * setup.kappa).abs()
}

/// Distinct differences of modes, in lexicographic order; includes 0.
pub fn closure_momenta(modes: &ModeSet) -> Vec<IVec3> {
    let mut ks = BTreeSet::new();
    for &p in modes.modes() {
        for &q in modes.modes() {
            ks.insert(sub(p, q));
        }
    }
    ks.into_iter().collect()
}

/// `b(k) = Σ a_{p−k} a_p` over outside `p` with `p − k` inside.
pub fn pair_annihilator(modes: &ModeSet, k: IVec3) -> SparseOperator {
    let terms: Vec<Term> = (0..modes.n())
        .filter(|&i| !modes.is_inside(i))
        .filter_map(|i| {
            let h = modes.index_of(sub(modes.modes()[i], k))?;
            modes.is_inside(h).then(|| (1.0, vec![Ladder::Annihilate(h), Ladder::Annihilate(i)]))
        })
        .collect();
    SparseOperator::from_terms(modes.n(), &terms)
}

/// `d*(k) = Σ_{p, p−k outside} a_p* a_{p−k} − Σ_{h, h+k inside} a_h* a_{h+k}`.
pub fn d_star(modes: &ModeSet, k: IVec3) -> SparseOperator {
    let mut terms: Vec<Term> = Vec::new();
    for (i, &p) in modes.modes().iter().enumerate() {
        if modes.is_inside(i) {
            if let Some(j) = modes.index_of(add(p, k)).filter(|&j| modes.is_inside(j)) {
                terms.push((-1.0, vec![Ladder::Create(i), Ladder::Annihilate(j)]));
            }
        } else if let Some(j) = modes.index_of(sub(p, k)).filter(|&j| !modes.is_inside(j)) {
            terms.push((1.0, vec![Ladder::Create(i), Ladder::Annihilate(j)]));
        }
    }
    SparseOperator::from_terms(modes.n(), &terms)
}

/// Operators of the truncated system. The interaction keeps only terms whose
/// four legs lie in the mode set.
#[derive(Debug, Clone)]
pub struct Hamiltonians {
    pub h: SparseOperator,
    pub h0: SparseOperator,
    pub qb: SparseOperator,
    pub e1: SparseOperator,
    /// `(1/N)·Σ_k V̂(k)·(d*(k) b(k) + h.c.)`, the momentum-conserving form.
    pub e2: SparseOperator,
    pub x: SparseOperator,
    pub h_corr: SparseOperator,
    /// `Y_S = −(1/2N)·Σ_p s_p·W_S(p)·a_p* a_p`, with `s_p = +1` outside and
    /// `−1` inside and `W_S(p) = Σ_{r∈S} V̂(p − r)`. On the balanced sector it
    /// is what truncation adds to the correlation Hamiltonian; for `S = ℤ³`
    /// `W_S` is constant and `Y_S` vanishes there.
    pub y_s: SparseOperator,
    pub e_hf: f64,
    pub k_set: Vec<IVec3>,
    pub interaction_terms: usize,
}

pub fn build_hamiltonians(modes: &ModeSet, pot: &Potential, setup: &FermiSetup) -> Result<Hamiltonians> {
    let n = modes.n();
    let nn = setup.n_f64();
    let ps = modes.modes();
    let ks = closure_momenta(modes);
    let vk: Vec<f64> = ks.iter().map(|&k| pot.checked(k)).collect::<Result<_>>()?;

    let mut terms: Vec<Term> = (0..n).map(|i| (signed_kinetic(setup, ps[i]), vec![Ladder::Create(i), Ladder::Annihilate(i)])).collect();
    let mut interaction_terms = 0;
    for (&k, &v) in ks.iter().zip(&vk) {
        for (i, &p) in ps.iter().enumerate() {
            for (j, &q) in ps.iter().enumerate() {
                if i == j {
                    continue;
                }
                let (Some(pk), Some(qk)) = (modes.index_of(add(p, k)), modes.index_of(sub(q, k))) else {
                    continue;
                };
                if pk == qk {
                    continue;
                }
                if k != [0, 0, 0] {
                    interaction_terms += 1;
                }
                terms.push((
                    v / (2.0 * nn),
                    vec![Ladder::Create(pk), Ladder::Create(qk), Ladder::Annihilate(j), Ladder::Annihilate(i)],
                ));
            }
        }
    }
    if interaction_terms == 0 && !pot.is_zero() {
        return Err(Error::EmptyInteraction);
    }
    let h = SparseOperator::from_terms(n, &terms);

    let dim = modes.dim();
    let occ = |s: usize, i: usize| (s >> i & 1) as f64;
    let e: Vec<f64> = ps.iter().map(|&p| excitation_energy(setup, p)).collect();
    let h0 = SparseOperator::diagonal((0..dim).map(|s| (0..n).map(|i| e[i] * occ(s, i)).sum()).collect());

    let mut qb = SparseOperator::zeros(dim);
    let mut e1 = SparseOperator::zeros(dim);
    let mut e2 = SparseOperator::zeros(dim);
    let mut xw = vec![0.0; n];
    for (&k, &v) in ks.iter().zip(&vk) {
        if v == 0.0 {
            continue;
        }
        let b = pair_annihilator(modes, k);
        let bm = pair_annihilator(modes, crate::lattice::neg(k));
        let bt = b.transpose();
        let quad = bt.mul(&b).add(&bt.mul(&bm.transpose()).add(&bm.mul(&b)).scale(0.5));
        qb = qb.add_scaled(&quad, v / nn);
        let ds = d_star(modes, k);
        e1 = e1.add_scaled(&ds.mul(&ds.transpose()), v / (2.0 * nn));
        let t = ds.mul(&b);
        e2 = e2.add_scaled(&t.add(&t.transpose()), v / nn);
        for (i, &p) in ps.iter().enumerate() {
            let other = if modes.is_inside(i) { add(p, k) } else { sub(p, k) };
            if let Some(j) = modes.index_of(other) {
                if modes.is_inside(j) != modes.is_inside(i) {
                    xw[i] -= v / (2.0 * nn);
                }
            }
        }
    }
    let x = SparseOperator::diagonal((0..dim).map(|s| (0..n).map(|i| xw[i] * occ(s, i)).sum()).collect());
    let h_corr = h0.add(&qb).add(&e1).add(&e2).add(&x);

    let w: Vec<f64> = ps
        .iter()
        .map(|&p| ps.iter().map(|&r| pot.checked(sub(p, r))).sum::<Result<f64>>())
        .collect::<Result<_>>()?;
    let yw: Vec<f64> = (0..n)
        .map(|i| {
            let s = if modes.is_inside(i) { -1.0 } else { 1.0 };
            -s * w[i] / (2.0 * nn)
        })
        .collect();
    let y_s = SparseOperator::diagonal((0..dim).map(|s| (0..n).map(|i| yw[i] * occ(s, i)).sum()).collect());

    let e_hf = truncated_hf_energy(modes, pot, setup)?;
    Ok(Hamiltonians { h, h0, qb, e1, e2, x, h_corr, y_s, e_hf, k_set: ks, interaction_terms })
}

/// `Σ_{p inside} ħ²p² + (1/2N)·Σ_{p,q inside}(V̂(0) − V̂(p − q))` over the mode set.
pub fn truncated_hf_energy(modes: &ModeSet, pot: &Potential, setup: &FermiSetup) -> Result<f64> {
    let ins: Vec<IVec3> = (0..modes.n()).filter(|&i| modes.is_inside(i)).map(|i| modes.modes()[i]).collect();
    let kin: f64 = ins.iter().map(|&p| signed_kinetic(setup, p)).sum();
    let v0 = pot.checked([0, 0, 0])?;
    let mut inter = 0.0;
    for &p in &ins {
        for &q in &ins {
            inter += v0 - pot.checked(sub(p, q))?;
        }
    }
    Ok(kin + inter / (2.0 * setup.n_f64()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrReport {
    pub n: usize,
    pub sector_dim: usize,
    pub phase_i: bool,
    pub e_hf: f64,
    pub interaction_terms: usize,
    /// `‖H‖_∞` on the full space.
    pub h_scale: f64,
    /// `‖R*HR − E_HF − H_corr − Y_S‖_∞` on the balanced sector.
    pub residual: f64,
    /// Same without the truncation counterterm.
    pub residual_without_counterterm: f64,
    pub relative: f64,
}

pub fn verify_corr_decomposition(modes: &ModeSet, pot: &Potential, setup: &FermiSetup) -> Result<CorrReport> {
    let hs = build_hamiltonians(modes, pot, setup)?;
    let ph = particle_hole_transform(modes);
    let sector = modes.balanced_sector();
    let lhs = ph.conjugate(&hs.h).add_scaled(&SparseOperator::identity(modes.dim()), -hs.e_hf);
    let without = lhs.sub(&hs.h_corr);
    let with = without.sub(&hs.y_s);
    let h_scale = hs.h.norm_inf();
    let residual = with.restricted_norm_inf(&sector);
    Ok(CorrReport {
        n: modes.n(),
        sector_dim: sector.len(),
        phase_i: ph.phase_i,
        e_hf: hs.e_hf,
        interaction_terms: hs.interaction_terms,
        h_scale,
        residual,
        residual_without_counterterm: without.restricted_norm_inf(&sector),
        relative: residual / h_scale.max(f64::MIN_POSITIVE),
    })
}

/// `Σ a_p* a_p` over modes with `||p| − k_F| > N^(−ε)`.
pub fn gapped_number(modes: &ModeSet, eps: f64, setup: &FermiSetup) -> SparseOperator {
    let thr = setup.n_f64().powf(-eps);
    let far: Vec<bool> = modes.modes().iter().map(|&p| (norm(p) - setup.k_f.value()).abs() > thr).collect();
    SparseOperator::diagonal(
        (0..modes.dim()).map(|s| far.iter().enumerate().filter(|(i, &f)| f && s >> i & 1 == 1).count() as f64).collect(),
    )
}

/// Assignment of modes to patches for the pair operators of the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchAssignment {
    pub labels: Vec<Option<usize>>,
    pub centers: Vec<[f64; 3]>,
}

impl PatchAssignment {
    pub fn explicit(modes: &ModeSet, labels: Vec<Option<usize>>, centers: Vec<[f64; 3]>) -> Result<Self> {
        if labels.len() != modes.n() {
            return Err(Error::InvalidInput("one label per mode required".into()));
        }
        if labels.iter().flatten().any(|&l| l >= centers.len()) {
            return Err(Error::InvalidInput("patch label without a center".into()));
        }
        let centers = centers
            .into_iter()
            .map(|c| {
                let r = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
                if !(r > 0.0) {
                    return Err(Error::InvalidInput("patch center must be nonzero".into()));
                }
                Ok([c[0] / r, c[1] / r, c[2] / r])
            })
            .collect::<Result<_>>()?;
        Ok(Self { labels, centers })
    }

    pub fn from_decomposition(modes: &ModeSet, dec: &PatchDecomposition) -> Self {
        Self {
            labels: modes.modes().iter().map(|&p| dec.locate(p)).collect(),
            centers: (0..dec.m()).map(|a| dec.center(a)).collect(),
        }
    }
}

/// `c_α(k)·n_α(k) = Σ a_{p−k'} a_p` over outside `p` and inside `p − k'`
/// both in patch `α`, where `k' = ±k` with the sign of `k·ω̂_α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOperator {
    pub alpha: usize,
    pub k: IVec3,
    pub k_eff: IVec3,
    pub k_dot_omega: f64,
    /// `(particle, hole)` mode indices.
    pub pairs: Vec<(usize, usize)>,
}

impl PairOperator {
    pub fn n_sq(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn n(&self) -> f64 {
        (self.pairs.len() as f64).sqrt()
    }

    /// `Σ a_h a_p` with integer entries.
    pub fn integer_annihilator(&self, modes: &ModeSet) -> SparseOperator {
        let terms: Vec<Term> =
            self.pairs.iter().map(|&(p, h)| (1.0, vec![Ladder::Annihilate(h), Ladder::Annihilate(p)])).collect();
        SparseOperator::from_terms(modes.n(), &terms)
    }

    pub fn annihilator(&self, modes: &ModeSet) -> SparseOperator {
        self.integer_annihilator(modes).scale(1.0 / self.n())
    }
}

pub fn pair_operator(modes: &ModeSet, asg: &PatchAssignment, k: IVec3, alpha: usize) -> Result<PairOperator> {
    if alpha >= asg.centers.len() {
        return Err(Error::InvalidInput(format!("no patch {alpha}")));
    }
    let w = asg.centers[alpha];
    let kw = k[0] as f64 * w[0] + k[1] as f64 * w[1] + k[2] as f64 * w[2];
    let k_eff = if kw < 0.0 { crate::lattice::neg(k) } else { k };
    let pairs: Vec<(usize, usize)> = (0..modes.n())
        .filter(|&i| !modes.is_inside(i) && asg.labels[i] == Some(alpha))
        .filter_map(|i| {
            let h = modes.index_of(sub(modes.modes()[i], k_eff))?;
            (modes.is_inside(h) && asg.labels[h] == Some(alpha)).then_some((i, h))
        })
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidInput(format!("patch {alpha} has no pairs for k = {k:?}")));
    }
    Ok(PairOperator { alpha, k, k_eff, k_dot_omega: kw, pairs })
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm_inf_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcrReport {
    pub alpha: usize,
    pub beta: usize,
    pub n_alpha_sq: u64,
    pub n_beta_sq: u64,
    /// `‖[c_α(k), c_β*(ℓ)] − δ‖_∞`
    pub error_norm: f64,
    /// `‖𝓔·Ω‖_∞`
    pub vacuum_action: f64,
    /// `[c_α(k), c_α*(k)]Ω == Ω` holds exactly (only for `α = β`, `k = ℓ`).
    pub vacuum_exact: bool,
    /// `⟨ψ_m, 𝓔 ψ_m⟩` for `ψ_m ∝ (c_α*(k))^m Ω`, `m = 1, 2`.
    pub pair_expectations: Vec<Option<f64>>,
    pub commutator_zero: bool,
}

pub fn ccr_error(modes: &ModeSet, asg: &PatchAssignment, k: IVec3, l: IVec3, alpha: usize, beta: usize) -> Result<CcrReport> {
    let ca = pair_operator(modes, asg, k, alpha)?;
    let cb = pair_operator(modes, asg, l, beta)?;
    let ba = ca.integer_annihilator(modes);
    let bb = cb.integer_annihilator(modes);
    let int_comm = commutator(&ba, &bb.transpose());
    let scale = 1.0 / ((ca.n_sq() * cb.n_sq()) as f64).sqrt();
    let same = alpha == beta && k == l;
    let mut err = int_comm.scale(scale);
    if same {
        err = err.sub(&SparseOperator::identity(modes.dim()));
    }
    let vac = basis_vector(modes.dim(), 0);
    let ev = err.matvec(&vac);
    let vacuum_exact = same && {
        let iv = int_comm.matvec(&vac);
        let n2 = ca.n_sq() as f64;
        iv.iter().enumerate().all(|(i, &x)| if i == 0 { x / n2 == 1.0 } else { x == 0.0 })
    };
    let ad = ba.transpose();
    let mut pair_expectations = Vec::new();
    let mut psi = vac.clone();
    for _ in 0..2 {
        psi = ad.matvec(&psi);
        let nrm = dotv(&psi, &psi).sqrt();
        if nrm == 0.0 {
            pair_expectations.push(None);
            continue;
        }
        let u: Vec<f64> = psi.iter().map(|x| x / nrm).collect();
        pair_expectations.push(Some(dotv(&u, &err.matvec(&u))));
    }
    Ok(CcrReport {
        alpha,
        beta,
        n_alpha_sq: ca.n_sq(),
        n_beta_sq: cb.n_sq(),
        error_norm: err.norm_inf(),
        vacuum_action: norm_inf_vec(&ev),
        vacuum_exact,
        pair_expectations,
        commutator_zero: int_comm.is_zero(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticReport {
    pub alpha: usize,
    /// `2ħκ|k·ω̂_α|`
    pub linear_coefficient: f64,
    /// `ħ²(2k'·(p − k_F ω̂_α) − |k|²)` per pair
    pub pair_coefficients: Vec<f64>,
    /// `‖(𝓡 c_α*(k)... )Ω‖₂` for the residual operator 𝓡.
    pub vacuum_residual: f64,
    pub residual_norm: f64,
    /// `ħ²·max_p |2k'·(p − k_F ω̂_α) − |k|²|`
    pub bound_shape: f64,
}

/// Residual `[ℍ₀, c_α*(k)] − 2ħκ|k·ω̂_α|·c_α*(k)` of the linearized dispersion.
pub fn kinetic_commutator_residual(
    modes: &ModeSet,
    asg: &PatchAssignment,
    k: IVec3,
    alpha: usize,
    setup: &FermiSetup,
) -> Result<KineticReport> {
    let c = pair_operator(modes, asg, k, alpha)?;
    let cs = c.annihilator(modes).transpose();
    let dim = modes.dim();
    let e: Vec<f64> = modes.modes().iter().map(|&p| excitation_energy(setup, p)).collect();
    let h0 = SparseOperator::diagonal((0..dim).map(|s| (0..modes.n()).filter(|&i| s >> i & 1 == 1).map(|i| e[i]).sum()).collect());
    let lin = 2.0 * setup.hbar * setup.kappa * c.k_dot_omega.abs();
    let r = commutator(&h0, &cs).add_scaled(&cs, -lin);
    let w = asg.centers[alpha];
    let kf = setup.k_f.value();
    let h2 = setup.hbar * setup.hbar;
    let pair_coefficients: Vec<f64> = c
        .pairs
        .iter()
        .map(|&(p, _)| {
            let q = modes.modes()[p];
            let shifted = [q[0] as f64 - kf * w[0], q[1] as f64 - kf * w[1], q[2] as f64 - kf * w[2]];
            let ke = c.k_eff;
            let kd = ke[0] as f64 * shifted[0] + ke[1] as f64 * shifted[1] + ke[2] as f64 * shifted[2];
            h2 * (2.0 * kd - dot(ke, ke) as f64)
        })
        .collect();
    let rv = r.matvec(&basis_vector(dim, 0));
    Ok(KineticReport {
        alpha,
        linear_coefficient: lin,
        bound_shape: pair_coefficients.iter().fold(0.0, |m, x| m.max(x.abs())),
        pair_coefficients,
        vacuum_residual: dotv(&rv, &rv).sqrt(),
        residual_norm: r.norm_inf(),
    })
}

/// Pair operators of a toy `I_k`: the patches of `I_k^+` followed by their
/// mirrors, as the bogo matrices index them.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyIndexSet {
    pub k: IVec3,
    pub ops: Vec<PairOperator>,
}

pub fn toy_index_set(modes: &ModeSet, asg: &PatchAssignment, k: IVec3, plus: &[usize], minus: &[usize]) -> Result<ToyIndexSet> {
    if plus.len() != minus.len() || plus.is_empty() {
        return Err(Error::InvalidInput("toy index set needs matching nonempty I+ and I-".into()));
    }
    let ops: Vec<PairOperator> =
        plus.iter().chain(minus).map(|&a| pair_operator(modes, asg, k, a)).collect::<Result<_>>()?;
    for (a, b) in ops[..plus.len()].iter().zip(&ops[plus.len()..]) {
        if a.n_sq() != b.n_sq() {
            return Err(Error::InvalidInput(format!("patches {} and {} have unequal pair counts", a.alpha, b.alpha)));
        }
    }
    Ok(ToyIndexSet { k, ops })
}

/// Kernels `K(k)` and `L(k)` of the bogo pipeline for the toy index set.
pub fn toy_kernels(set: &ToyIndexSet, pot: &Potential, setup: &FermiSetup) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let i = set.ops.len() / 2;
    let kn = norm(set.k);
    let plus = &set.ops[..i];
    let u = DVector::from_iterator(i, plus.iter().map(|c| (c.k_dot_omega.abs() / kn).sqrt()));
    let v = DVector::from_iterator(i, plus.iter().map(|c| setup.hbar * c.n() / (setup.kappa * kn.sqrt())));
    let block = BlockData::new(u, v, setup.kappa * pot.checked(set.k)? / 2.0)?;
    let qd = analyze(&block)?;
    Ok((qd.k, qd.l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// `T_λ = exp(λ/2·Σ K_αβ (c_α* c_β* − h.c.))`
    PairCreation,
    /// `Z_λ = exp(λ·Σ L_αβ c_α* c_β)`
    OneParticle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorResidual {
    /// Pair number `m`: `m` particles and `m` holes.
    pub m: u32,
    pub dim: usize,
    /// `‖𝔈_γ P_m‖` per γ.
    pub per_gamma: Vec<f64>,
    pub sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BogoliubovReport {
    pub generator: Generator,
    pub lambda: f64,
    pub kernel_norm: f64,
    pub unitarity: f64,
    pub sectors: Vec<SectorResidual>,
    pub vacuum_residual: f64,
    /// Residual is nondecreasing from the 1-pair to the 2-pair sector.
    pub sector_monotone: bool,
}

/// `exp(t·G)·v` by a scaled Taylor series.
pub fn expm_apply(g: &SparseOperator, t: f64, v: &[f64]) -> Vec<f64> {
    let nrm = g.norm_inf() * t.abs();
    let steps = (nrm / 0.5).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = v.to_vec();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for j in 1..80 {
            term = g.matvec(&term).into_iter().map(|y| y * h / j as f64).collect();
            for (a, b) in acc.iter_mut().zip(&term) {
                *a += b;
            }
            if norm_inf_vec(&term) <= 1e-18 * norm_inf_vec(&acc).max(1e-300) {
                break;
            }
        }
        x = acc;
    }
    x
}

/// Applies `T_λ` or `Z_λ` built from the toy index set and measures, on the
/// 0-, 1- and 2-pair sectors, the deviation of `U* c_γ U` from its bosonic
/// counterpart.
pub fn apply_bogoliubov(
    modes: &ModeSet,
    set: &ToyIndexSet,
    kernel: &DMatrix<f64>,
    generator: Generator,
    lambda: f64,
) -> Result<BogoliubovReport> {
    if modes.n() > BOGOLIUBOV_MODE_LIMIT {
        return Err(Error::DimensionLimit { n: modes.n(), limit: BOGOLIUBOV_MODE_LIMIT });
    }
    let j = set.ops.len();
    if kernel.nrows() != j || kernel.ncols() != j {
        return Err(Error::InvalidInput(format!("kernel is {}x{}, index set has {j}", kernel.nrows(), kernel.ncols())));
    }
    let dim = modes.dim();
    let c: Vec<SparseOperator> = set.ops.iter().map(|o| o.annihilator(modes)).collect();
    let cs: Vec<SparseOperator> = c.iter().map(SparseOperator::transpose).collect();
    let mut g = SparseOperator::zeros(dim);
    for a in 0..j {
        for b in 0..j {
            let x = kernel[(a, b)];
            if x == 0.0 {
                continue;
            }
            g = match generator {
                Generator::PairCreation => g.add_scaled(&cs[a].mul(&cs[b]).sub(&c[b].mul(&c[a])), 0.5 * x),
                Generator::OneParticle => g.add_scaled(&cs[a].mul(&c[b]), x),
            };
        }
    }
    let lk = kernel * lambda;
    let (mix_c, mix_cs) = match generator {
        Generator::PairCreation => (sym_fn(&lk, f64::cosh), sym_fn(&lk, f64::sinh)),
        Generator::OneParticle => (lk.clone().exp().transpose(), DMatrix::zeros(j, j)),
    };
    let mut unitarity = 0.0f64;
    let mut sectors = Vec::new();
    for m in 0..=2u32 {
        let states = modes.pair_sector(m);
        if states.is_empty() {
            continue;
        }
        let cols: Vec<Vec<Vec<f64>>> = states
            .par_iter()
            .map(|&s| {
                let e = basis_vector(dim, s);
                let ue = expm_apply(&g, lambda, &e);
                (0..j)
                    .map(|gm| {
                        let lhs = expm_apply(&g, -lambda, &c[gm].matvec(&ue));
                        let mut rhs = vec![0.0; dim];
                        for a in 0..j {
                            for (coef, ops) in [(mix_c[(a, gm)], &c[a]), (mix_cs[(a, gm)], &cs[a])] {
                                if coef != 0.0 {
                                    for (r, y) in rhs.iter_mut().zip(ops.matvec(&e)) {
                                        *r += coef * y;
                                    }
                                }
                            }
                        }
                        lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect()
                    })
                    .collect()
            })
            .collect();
        for &s in &states {
            let e = basis_vector(dim, s);
            let back = expm_apply(&g, -lambda, &expm_apply(&g, lambda, &e));
            let dev = back.iter().zip(&e).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            unitarity = unitarity.max(dev);
        }
        let per_gamma: Vec<f64> = (0..j)
            .map(|gm| {
                let n = states.len();
                let gram = DMatrix::from_fn(n, n, |a, b| dotv(&cols[a][gm], &cols[b][gm]));
                SymmetricEigen::new(gram).eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x)).sqrt()
            })
            .collect();
        sectors.push(SectorResidual { m, dim: states.len(), sum: per_gamma.iter().sum(), per_gamma });
    }
    let find = |m: u32| sectors.iter().find(|s| s.m == m).map(|s| s.sum);
    let sector_monotone = match (find(1), find(2)) {
        (Some(a), Some(b)) => a.is_finite() && b.is_finite() && a <= b,
        _ => false,
    };
    Ok(BogoliubovReport {
        generator,
        lambda,
        kernel_norm: kernel.norm(),
        unitarity,
        vacuum_residual: find(0).unwrap_or(f64::NAN),
        sectors,
        sector_monotone,
    })
}

/// A named mode set with the potential used on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub name: String,
    pub k_f: f64,
    pub modes: Vec<IVec3>,
    pub potential: Potential,
}

pub fn standard_configurations() -> Result<Vec<OracleConfig>> {
    let exp = Potential::new(crate::model::Family::Exponential { c: 1.0, a: 0.7 }, 10.0)?;
    let pow = Potential::new(crate::model::Family::PowerLaw { c: 0.8, s: 3.0 }, 10.0)?;
    let cmp = Potential::new(crate::model::Family::CompactSupport { c: 0.6, k0: 2.0 }, 10.0)?;
    Ok(vec![
        OracleConfig {
            name: "unit-ball-8".into(),
            k_f: 1.0,
            modes: vec![[0, 0, 0], [1, 0, 0], [-1, 0, 0], [0, 0, 1], [1, 0, 1], [2, 0, 0], [-1, 0, 1], [0, 0, 2]],
            potential: exp,
        },
        OracleConfig { name: "mirror-pairs-12".into(), k_f: 1.0, modes: toy_modes(), potential: pow },
        OracleConfig {
            name: "sqrt2-shell-12".into(),
            k_f: 2f64.sqrt(),
            modes: vec![
                [1, 1, 0],
                [1, 0, 0],
                [0, 1, 0],
                [0, 0, 1],
                [1, 0, 1],
                [2, 1, 0],
                [1, 2, 0],
                [2, 0, 0],
                [1, 1, 1],
                [2, 1, 1],
                [0, 0, 2],
                [2, 0, 1],
            ],
            potential: cmp,
        },
    ])
}

/// Twelve modes around the unit ball forming two northern patches for
/// `k = e₃` and their mirrors.
pub fn toy_modes() -> Vec<IVec3> {
    vec![
        [0, 0, 2],
        [0, 0, 1],
        [1, 0, 1],
        [1, 0, 0],
        [0, 1, 1],
        [0, 1, 0],
        [0, 0, -2],
        [0, 0, -1],
        [-1, 0, -1],
        [-1, 0, 0],
        [0, -1, -1],
        [0, -1, 0],
    ]
}

/// Patches of [`toy_modes`]: patch 0 holds the pairs along `e₃` and `e₁+e₃`,
/// patch 1 the pair along `e₂+e₃`, patches 2 and 3 their mirrors.
pub fn toy_assignment(modes: &ModeSet) -> Result<PatchAssignment> {
    let label = |p: IVec3| -> Option<usize> {
        let north = match p {
            [0, 0, 2] | [0, 0, 1] | [1, 0, 1] | [1, 0, 0] => Some(0),
            [0, 1, 1] | [0, 1, 0] => Some(1),
            _ => None,
        };
        north.or_else(|| match crate::lattice::neg(p) {
            [0, 0, 2] | [0, 0, 1] | [1, 0, 1] | [1, 0, 0] => Some(2),
            [0, 1, 1] | [0, 1, 0] => Some(3),
            _ => None,
        })
    };
    let labels = modes.modes().iter().map(|&p| label(p)).collect();
    let centers = vec![[0.3, 0.0, 1.0], [0.0, 0.6, 1.0], [-0.3, 0.0, -1.0], [0.0, -0.6, -1.0]];
    PatchAssignment::explicit(modes, labels, centers)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleVerdict {
    fn at_most(check: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { check: check.into(), value, tolerance, pass: value <= tolerance }
    }

    fn flag(check: impl Into<String>, ok: bool) -> Self {
        Self { check: check.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSuite {
    pub corr: Vec<(String, CorrReport)>,
    pub car: Vec<(String, CarReport)>,
    pub particle_hole: Vec<(String, ParticleHoleReport)>,
    pub ccr: CcrReport,
    pub kinetic: KineticReport,
    pub bogoliubov_t: BogoliubovReport,
    pub bogoliubov_z: BogoliubovReport,
    pub verdicts: Vec<OracleVerdict>,
}

impl OracleSuite {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// Runs the identity checks on the standard configurations and the toy
/// Bogoliubov checks on [`toy_modes`].
pub fn run_oracle_suite() -> Result<OracleSuite> {
    let mut verdicts = Vec::new();
    let mut corr = Vec::new();
    let mut car = Vec::new();
    let mut particle_hole = Vec::new();
    for cfg in standard_configurations()? {
        let setup = FermiSetup::new(cfg.k_f)?;
        let modes = ModeSet::new(cfg.modes.clone(), setup.k_f, DEFAULT_MODE_LIMIT)?;
        let rep = verify_corr_decomposition(&modes, &cfg.potential, &setup)?;
        verdicts.push(OracleVerdict::at_most(format!("corr/{}", cfg.name), rep.residual, 1e-12 * rep.h_scale));
        let c = car_check(&modes);
        verdicts.push(OracleVerdict::at_most(format!("car/{}", cfg.name), c.mixed.max(c.same), 0.0));
        let ph = particle_hole_transform(&modes).report(&modes);
        let worst = ph.involution.max(ph.self_adjoint).max(ph.unitarity).max(ph.conjugation).max(ph.number);
        verdicts.push(OracleVerdict::at_most(format!("particle-hole/{}", cfg.name), worst, 0.0));
        corr.push((cfg.name.clone(), rep));
        car.push((cfg.name.clone(), c));
        particle_hole.push((cfg.name, ph));
    }

    let setup = FermiSetup::new(1.0)?;
    let modes = ModeSet::new(toy_modes(), setup.k_f, BOGOLIUBOV_MODE_LIMIT)?;
    let asg = toy_assignment(&modes)?;
    let k = [0, 0, 1];
    let ccr = ccr_error(&modes, &asg, k, k, 0, 0)?;
    verdicts.push(OracleVerdict::flag("ccr/vacuum-exact", ccr.vacuum_exact && ccr.vacuum_action == 0.0));
    let kinetic = kinetic_commutator_residual(&modes, &asg, k, 0, &setup)?;
    let pot = Potential::new(crate::model::Family::Exponential { c: 1.0, a: 0.7 }, 10.0)?;
    let set = toy_index_set(&modes, &asg, k, &[0, 1], &[2, 3])?;
    let (kk, ll) = toy_kernels(&set, &pot, &setup)?;
    let t = apply_bogoliubov(&modes, &set, &kk, Generator::PairCreation, 1.0)?;
    verdicts.push(OracleVerdict::at_most("bogoliubov-t/unitarity", t.unitarity, 1e-9));
    verdicts.push(OracleVerdict::at_most("bogoliubov-t/vacuum", t.vacuum_residual, 1e-12));
    verdicts.push(OracleVerdict::flag("bogoliubov-t/sector-monotone", t.sector_monotone));
    let z = apply_bogoliubov(&modes, &set, &ll, Generator::OneParticle, 1.0)?;
    verdicts.push(OracleVerdict::at_most("bogoliubov-z/unitarity", z.unitarity, 1e-9));
    verdicts.push(OracleVerdict::at_most("bogoliubov-z/vacuum", z.vacuum_residual, 1e-12));
    Ok(OracleSuite { corr, car, particle_hole, ccr, kinetic, bogoliubov_t: t, bogoliubov_z: z, verdicts })
}
