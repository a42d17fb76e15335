//! Per-momentum quadratic-Hamiltonian matrices and their factorizations.
//!
//! All matrix functions of symmetric matrices go through a symmetric
//! eigendecomposition. The index space of the `2I × 2I` matrices is `I_k^+`
//! followed by the mirrored `I_k^−`.

use crate::error::{Error, Result};
use crate::lattice::{norm, IVec3};
use crate::model::{FermiSetup, Potential};
use crate::patches::PairIndex;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const ORTHO_TOL: f64 = 1e-10;
pub const PSD_SLACK: f64 = -1e-10;
pub const RECON_TOL: f64 = 1e-9;
/// Rotation angles this close to π make the logarithm branch ambiguous.
pub const BRANCH_GAP: f64 = 1e-6;

/// `d = diag(u²)` and `b = g·v vᵀ` for one momentum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockData {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub g: f64,
}

impl BlockData {
    pub fn new(u: DVector<f64>, v: DVector<f64>, g: f64) -> Result<Self> {
        if u.is_empty() || u.len() != v.len() {
            return Err(Error::InvalidInput(format!("block sizes u={} v={}", u.len(), v.len())));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidInput(format!("coupling g must be >= 0, got {g}")));
        }
        if u.iter().any(|&x| !(x > 0.0 && x.is_finite())) || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("u must be positive and v finite".into()));
        }
        Ok(Self { u, v, g })
    }

    pub fn i(&self) -> usize {
        self.u.len()
    }

    pub fn d(&self) -> DVector<f64> {
        self.u.map(|x| x * x)
    }

    pub fn b(&self) -> DMatrix<f64> {
        &self.v * self.v.transpose() * self.g
    }

    /// Relabels the patch indices by `perm` (new position `i` holds old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            u: DVector::from_iterator(self.i(), perm.iter().map(|&p| self.u[p])),
            v: DVector::from_iterator(self.i(), perm.iter().map(|&p| self.v[p])),
            g: self.g,
        }
    }
}

/// `u_α = |k̂·ω̂_α|^½`, `v_α = ħ·n_α/(κ√|k|)`, `g = κV̂(k)/2` over `I_k^+`.
pub fn assemble_blocks(k: IVec3, idx: &PairIndex, pot: &Potential, setup: &FermiSetup) -> Result<BlockData> {
    if idx.plus.is_empty() {
        return Err(Error::EmptyIndexSet { k });
    }
    let kn = norm(k);
    let u = DVector::from_iterator(idx.plus.len(), idx.plus.iter().map(|e| (e.k_dot_omega.abs() / kn).sqrt()));
    let v = DVector::from_iterator(
        idx.plus.len(),
        idx.plus.iter().map(|e| setup.hbar * e.n() / (setup.kappa * kn.sqrt())),
    );
    let g = setup.kappa * pot.checked(k)? / 2.0;
    BlockData::new(u, v, g)
}

/// Random instance with `I ∈ [1, i_max]`, `u² ∈ [0.05, 1]`, `g ∈ [0, 5]`,
/// `‖v‖ ≤ 2`.
pub fn random_block<R: Rng>(rng: &mut R, i_max: usize) -> BlockData {
    let i = rng.random_range(1..=i_max);
    let u = DVector::from_fn(i, |_, _| rng.random_range(0.05..=1.0f64).sqrt());
    let mut v = DVector::from_fn(i, |_, _| rng.random_range(-1.0..=1.0f64));
    let n = v.norm();
    let target = rng.random_range(0.0..=2.0f64);
    if n > 0.0 {
        v *= target / n;
    }
    let g = rng.random_range(0.0..=5.0f64);
    BlockData { u, v, g }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dww {
    pub d: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub wt: DMatrix<f64>,
}

impl Dww {
    /// `D + W − W̃`
    pub fn m1(&self) -> DMatrix<f64> {
        &self.d + &self.w - &self.wt
    }
    /// `D + W + W̃`
    pub fn m2(&self) -> DMatrix<f64> {
        &self.d + &self.w + &self.wt
    }
}

/// `D = diag(d,d)`, `W = diag(b,b)`, `W̃ = antidiag(b,b)`.
pub fn build_dww(block: &BlockData) -> Dww {
    let i = block.i();
    let d = block.d();
    let b = block.b();
    let mut dm = DMatrix::zeros(2 * i, 2 * i);
    let mut w = DMatrix::zeros(2 * i, 2 * i);
    let mut wt = DMatrix::zeros(2 * i, 2 * i);
    for a in 0..i {
        dm[(a, a)] = d[a];
        dm[(a + i, a + i)] = d[a];
    }
    w.view_mut((0, 0), (i, i)).copy_from(&b);
    w.view_mut((i, i), (i, i)).copy_from(&b);
    wt.view_mut((0, i), (i, i)).copy_from(&b);
    wt.view_mut((i, 0), (i, i)).copy_from(&b);
    Dww { d: dm, w, wt }
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `f(m)` for a symmetric matrix through its eigendecomposition.
pub fn sym_fn<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F) -> DMatrix<f64> {
    let e = SymmetricEigen::new(symmetrize(m));
    let fv = e.eigenvalues.map(f);
    &e.eigenvectors * DMatrix::from_diagonal(&fv) * e.eigenvectors.transpose()
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

fn scale(m: &DMatrix<f64>) -> f64 {
    m.amax().max(1.0)
}

/// Square root of a PSD matrix; eigenvalues down to the slack are clamped.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = SymmetricEigen::new(symmetrize(m));
    let lo = e.eigenvalues.min();
    if lo < PSD_SLACK * scale(m) {
        return Err(Error::NotPsd { min_eig: lo });
    }
    let fv = e.eigenvalues.map(|x| x.max(0.0).sqrt());
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&fv) * e.eigenvectors.transpose())
}

fn spd_power(m: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    let e = SymmetricEigen::new(symmetrize(m));
    let lo = e.eigenvalues.min();
    if lo <= 1e-14 * scale(m) {
        return Err(Error::NearSingular { min_eig: lo });
    }
    let fv = e.eigenvalues.map(|x| x.powf(p));
    Ok(&e.eigenvectors * DMatrix::from_diagonal(&fv) * e.eigenvectors.transpose())
}

/// `E = [(D+W−W̃)^½ (D+W+W̃) (D+W−W̃)^½]^½`.
pub fn compute_e(dww: &Dww) -> Result<DMatrix<f64>> {
    let r = psd_sqrt(&dww.m1())?;
    psd_sqrt(&(&r * dww.m2() * &r))
}

/// `U = (1/√2)[[1,1],[1,−1]]` in `I × I` blocks.
pub fn u_matrix(i: usize) -> DMatrix<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::zeros(2 * i, 2 * i);
    for a in 0..i {
        u[(a, a)] = s;
        u[(a, a + i)] = s;
        u[(a + i, a)] = s;
        u[(a + i, a + i)] = -s;
    }
    u
}

/// `E` assembled from `U·diag([d^½(d+2b)d^½]^½, [(d+2b)^½ d (d+2b)^½]^½)·U`.
pub fn compute_e_rotated(block: &BlockData) -> Result<DMatrix<f64>> {
    let i = block.i();
    let dh = DMatrix::from_diagonal(&block.u);
    let d = DMatrix::from_diagonal(&block.d());
    let d2b = &d + block.b() * 2.0;
    let e1 = psd_sqrt(&(&dh * &d2b * &dh))?;
    let s = psd_sqrt(&d2b)?;
    let e2 = psd_sqrt(&(&s * &d * &s))?;
    let mut blk = DMatrix::zeros(2 * i, 2 * i);
    blk.view_mut((0, 0), (i, i)).copy_from(&e1);
    blk.view_mut((i, i), (i, i)).copy_from(&e2);
    let u = u_matrix(i);
    Ok(&u * blk * &u)
}

/// Roots of `det(diag(δ) + z zᵀ − μ)`, returned as `(pole, offset)` with
/// `μ = pole + offset`, one per index, in ascending pole order. Deflated
/// roots have offset zero.
pub fn secular_roots(delta: &[f64], z: &[f64]) -> Vec<(f64, f64)> {
    assert_eq!(delta.len(), z.len());
    let n = delta.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| delta[a].total_cmp(&delta[b]).then(a.cmp(&b)));
    let dmax = delta.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let znorm2: f64 = z.iter().map(|x| x * x).sum();
    let mut out = Vec::with_capacity(n);
    // active poles: (delta, weight)
    let mut poles: Vec<(f64, f64)> = Vec::new();
    let mut j = 0;
    while j < n {
        let d0 = delta[order[j]];
        let mut wsum = 0.0;
        let mut size = 0;
        while j < n && delta[order[j]] - d0 <= 1e-15 * dmax {
            wsum += z[order[j]].powi(2);
            size += 1;
            j += 1;
        }
        if wsum <= 1e-32 * znorm2.max(1e-300) {
            out.extend(std::iter::repeat_n((d0, 0.0), size));
        } else {
            out.extend(std::iter::repeat_n((d0, 0.0), size - 1));
            poles.push((d0, wsum));
        }
    }
    let wtot: f64 = poles.iter().map(|p| p.1).sum();
    for i in 0..poles.len() {
        let base = poles[i].0;
        let gap = if i + 1 < poles.len() { poles[i + 1].0 - base } else { wtot };
        let diffs: Vec<f64> = poles.iter().map(|p| p.0 - base).collect();
        let f = |tau: f64| -> f64 {
            let mut s = 1.0;
            for (dj, p) in diffs.iter().zip(&poles) {
                s += p.1 / (dj - tau);
            }
            s
        };
        let (mut lo, mut hi) = (0.0f64, gap);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push((base, 0.5 * (lo + hi)));
    }
    out.sort_by(|a, b| (a.0 + a.1).total_cmp(&(b.0 + b.1)));
    out
}

/// `tr P − tr d` from the eigenvalues of `d² + 2g(u∘v)(u∘v)ᵀ`, summed as
/// `Σ offset/(√μ + √pole)` so that no large traces cancel.
pub fn trace_p_minus_d_secular(block: &BlockData) -> f64 {
    let delta: Vec<f64> = block.u.iter().map(|x| x.powi(4)).collect();
    let s = (2.0 * block.g).sqrt();
    let z: Vec<f64> = block.u.iter().zip(block.v.iter()).map(|(a, b)| s * a * b).collect();
    secular_roots(&delta, &z)
        .iter()
        .map(|&(p, t)| if t == 0.0 { 0.0 } else { t / ((p + t).sqrt() + p.sqrt()) })
        .sum()
}

pub fn trace_p_secular(block: &BlockData) -> f64 {
    block.d().sum() + trace_p_minus_d_secular(block)
}

/// `tr(E − D − W) = 2(tr P − tr d − g‖v‖²)` from the secular route.
pub fn trace_correction_secular(block: &BlockData) -> f64 {
    2.0 * (trace_p_minus_d_secular(block) - block.g * block.v.norm_squared())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub e_rotated_residual: f64,
    pub s1_s2_residual: f64,
    pub o_orthogonality: f64,
    pub ot_orthogonality: f64,
    pub det_o: f64,
    pub det_a: f64,
    pub e_factor_residual: f64,
    pub l_symmetric_part: f64,
    pub exp_l_residual: f64,
    pub min_eig_p_minus_d: f64,
    pub min_eig_frak_k: f64,
    pub min_eig_m1: f64,
    pub min_eig_m2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticData {
    pub block: BlockData,
    pub dww: Dww,
    pub e: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub s1: DMatrix<f64>,
    pub o: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub ot: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub pt: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub frak_k: DMatrix<f64>,
    pub diagnostics: Diagnostics,
}

/// `S₁ = (D+W−W̃)^½ E^(−½)` and `K = log|S₁ᵀ| = ½·log(S₁S₁ᵀ)`; also returns
/// `‖S₁S₂ᵀ − 1‖` with `S₂ = (D+W−W̃)^(−½) E^½`.
pub fn compute_k(dww: &Dww, e: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let r = psd_sqrt(&dww.m1())?;
    let s1 = &r * spd_power(e, -0.5)?;
    let s2 = spd_power(&dww.m1(), -0.5)? * spd_power(e, 0.5)?;
    let n = s1.nrows();
    let res = (&s1 * s2.transpose() - DMatrix::identity(n, n)).amax();
    let k = sym_fn(&(&s1 * s1.transpose()), |x| 0.5 * x.ln());
    Ok((symmetrize(&k), s1, res))
}

pub struct PolarFactors {
    pub o: DMatrix<f64>,
    pub a: DMatrix<f64>,
    pub ot: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub pt: DMatrix<f64>,
}

/// `X = (d+2b)^½ d^½ = A·P`, `Õ = U·diag(1,A)·Uᵀ`, `P̃ = diag(P,P)` and
/// `O = S₁(S₁ᵀS₁)^(−½)`.
pub fn compute_polar_factors(block: &BlockData, s1: &DMatrix<f64>) -> Result<PolarFactors> {
    let i = block.i();
    let d = DMatrix::from_diagonal(&block.d());
    let x = psd_sqrt(&(&d + block.b() * 2.0))? * DMatrix::from_diagonal(&block.u);
    let xtx = x.transpose() * &x;
    let p = psd_sqrt(&xtx)?;
    let a = &x * spd_power(&xtx, -0.5)?;
    let mut blk = DMatrix::identity(2 * i, 2 * i);
    blk.view_mut((i, i), (i, i)).copy_from(&a);
    let u = u_matrix(i);
    let ot = &u * blk * u.transpose();
    let mut pt = DMatrix::zeros(2 * i, 2 * i);
    pt.view_mut((0, 0), (i, i)).copy_from(&p);
    pt.view_mut((i, i), (i, i)).copy_from(&p);
    let o = s1 * spd_power(&(s1.transpose() * s1), -0.5)?;
    Ok(PolarFactors { o, a, ot, p, pt })
}

/// `log Q` for a special orthogonal `Q`. Its symmetric part `S` and
/// antisymmetric part `A` commute; on each rotation plane `S = cos θ` and
/// `A = sin θ·J`, so `log Q = A·h(S)` with `h(cos θ) = θ/sin θ`. Returns the
/// antisymmetrized logarithm and the norm of the discarded symmetric part.
pub fn log_special_orthogonal(q: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    if q.determinant() <= 0.0 {
        return Err(Error::LogBranch { angle: PI });
    }
    let s = symmetrize(q);
    let a = (q - q.transpose()) * 0.5;
    let e = SymmetricEigen::new(s);
    let mut hv = e.eigenvalues.clone();
    for c in hv.iter_mut() {
        let theta = c.clamp(-1.0, 1.0).acos();
        if PI - theta < BRANCH_GAP {
            return Err(Error::LogBranch { angle: theta });
        }
        *c = if theta < 1e-4 { 1.0 + theta * theta / 6.0 } else { theta / theta.sin() };
    }
    let h = &e.eigenvectors * DMatrix::from_diagonal(&hv) * e.eigenvectors.transpose();
    let l = a * h;
    let sym = symmetrize(&l).norm();
    Ok(((&l - l.transpose()) * 0.5, sym))
}

/// Runs the full per-k pipeline on one block.
pub fn analyze(block: &BlockData) -> Result<QuadraticData> {
    let dww = build_dww(block);
    let min_eig_m1 = min_eigenvalue(&dww.m1());
    let min_eig_m2 = min_eigenvalue(&dww.m2());
    let e = compute_e(&dww)?;
    let e_rot = compute_e_rotated(block)?;
    let (k, s1, s1_s2_residual) = compute_k(&dww, &e)?;
    let pf = compute_polar_factors(block, &s1)?;
    let n = e.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let i = block.i();
    let id_i = DMatrix::<f64>::identity(i, i);
    let q = &pf.o * &pf.ot;
    let (l, l_sym) = log_special_orthogonal(&q)?;
    let frak_k = &pf.o * &e * pf.o.transpose();
    let d = DMatrix::from_diagonal(&block.d());
    let diagnostics = Diagnostics {
        e_rotated_residual: (&e - &e_rot).norm() / e.norm().max(1e-300),
        s1_s2_residual,
        o_orthogonality: (pf.o.transpose() * &pf.o - &id).amax(),
        ot_orthogonality: (pf.ot.transpose() * &pf.ot - &id).amax().max((pf.a.transpose() * &pf.a - &id_i).amax()),
        det_o: pf.o.determinant(),
        det_a: pf.a.determinant(),
        e_factor_residual: (&pf.ot * &pf.pt * pf.ot.transpose() - &e).norm() / e.norm().max(1e-300),
        l_symmetric_part: l_sym,
        exp_l_residual: (l.exp() - &q).amax(),
        min_eig_p_minus_d: min_eigenvalue(&(&pf.p - d)),
        min_eig_frak_k: min_eigenvalue(&frak_k),
        min_eig_m1,
        min_eig_m2,
    };
    Ok(QuadraticData {
        block: block.clone(),
        dww,
        e,
        k,
        s1,
        o: pf.o,
        a: pf.a,
        ot: pf.ot,
        p: pf.p,
        pt: pf.pt,
        l,
        frak_k,
        diagnostics,
    })
}

fn blocks2(tl: &DMatrix<f64>, tr: &DMatrix<f64>, bl: &DMatrix<f64>, br: &DMatrix<f64>) -> DMatrix<f64> {
    let n = tl.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(tl);
    m.view_mut((0, n), (n, n)).copy_from(tr);
    m.view_mut((n, 0), (n, n)).copy_from(bl);
    m.view_mut((n, n), (n, n)).copy_from(br);
    m
}

/// Relative Frobenius residual of
/// `[[D+W, W̃],[W̃, D+W]] = C·diag(OÕ,OÕ)·diag(P̃,P̃)·diag(OÕ,OÕ)ᵀ·C`
/// with `C = [[cosh K, −sinh K],[−sinh K, cosh K]]`, for `K = log|S₁ᵀ|`.
pub fn verify_decomposition(qd: &QuadraticData) -> f64 {
    reconstruction_residual(qd, -1.0)
}

/// Same reconstruction with `sinh K` entering with the given sign.
pub fn reconstruction_residual(qd: &QuadraticData, sinh_sign: f64) -> f64 {
    let n = qd.e.nrows();
    let z = DMatrix::zeros(n, n);
    let dw = &qd.dww.d + &qd.dww.w;
    let target = blocks2(&dw, &qd.dww.wt, &qd.dww.wt, &dw);
    let ch = sym_fn(&qd.k, f64::cosh);
    let sh = sym_fn(&qd.k, f64::sinh) * sinh_sign;
    let c = blocks2(&ch, &sh, &sh, &ch);
    let q = &qd.o * &qd.ot;
    let qq = blocks2(&q, &z, &z, &q);
    let pp = blocks2(&qd.pt, &z, &z, &qd.pt);
    let rec = &c * &qq * pp * qq.transpose() * &c;
    (rec - &target).norm() / target.norm().max(1e-300)
}

/// `tr(E − D − W)` from the dense matrices.
pub fn trace_correction(qd: &QuadraticData) -> f64 {
    (&qd.e - &qd.dww.d - &qd.dww.w).trace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(u: f64, v: f64, g: f64) -> BlockData {
        BlockData::new(DVector::from_element(1, u), DVector::from_element(1, v), g).unwrap()
    }

    #[test]
    fn zero_coupling_collapses() {
        let b = BlockData::new(DVector::from_vec(vec![0.5, 0.9]), DVector::from_vec(vec![0.3, 0.2]), 0.0).unwrap();
        let qd = analyze(&b).unwrap();
        assert!((&qd.e - &qd.dww.d).amax() < 1e-15);
        assert!(qd.k.amax() < 1e-15);
        assert!(qd.l.amax() < 1e-15);
        assert!(trace_correction(&qd).abs() < 1e-15);
        assert_eq!(trace_correction_secular(&b), 0.0);
    }

    #[test]
    fn scalar_block_closed_form() {
        let (u, v, g) = (0.7f64, 0.4, 1.3);
        let b = scalar(u, v, g);
        let qd = analyze(&b).unwrap();
        let ev = (u * u * (u * u + 2.0 * g * v * v)).sqrt();
        let eig = SymmetricEigen::new(qd.e.clone()).eigenvalues;
        for x in eig.iter() {
            assert!((x - ev).abs() < 1e-13);
        }
        let closed = 2.0 * ((u.powi(4) + 2.0 * g * u * u * v * v).sqrt() - u * u - g * v * v);
        assert!((trace_correction(&qd) - closed).abs() < 1e-13);
        assert!((trace_correction_secular(&b) - closed).abs() < 1e-14);
    }

    #[test]
    fn secular_handles_degenerate_poles() {
        let delta = [0.25, 0.25, 0.25, 1.0];
        let z = [0.3, 0.4, 0.0, 0.5];
        let roots = secular_roots(&delta, &z);
        let mut m = DMatrix::from_diagonal(&DVector::from_row_slice(&delta));
        let zv = DVector::from_row_slice(&z);
        m += &zv * zv.transpose();
        let mut dense: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        for (r, d) in roots.iter().zip(&dense) {
            assert!((r.0 + r.1 - d).abs() < 1e-14, "{r:?} vs {d}");
        }
    }

    #[test]
    fn stated_sinh_sign_does_not_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut b = random_block(&mut rng, 6);
        b.g = 2.0;
        b.v = DVector::from_element(b.i(), 0.5);
        let qd = analyze(&b).unwrap();
        assert!(verify_decomposition(&qd) < 1e-12);
        assert!(reconstruction_residual(&qd, 1.0) > 1e-3);
    }
}
