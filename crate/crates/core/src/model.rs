//! Physical setup, interaction potentials, Hartree–Fock energy and the
//! closed-form RPA correlation energy.

use crate::error::{Error, Result};
use crate::lattice::{self, norm2, IVec3};
use crate::quad::{self, QuadControl, QuadResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// A non-negative radius whose square is compared exactly against integer
/// squared norms. Squares within 1e-9 (relative) of an integer snap to it, so
/// `Radius::new(2f64.sqrt())` contains every `|p|² = 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Radius {
    value: f64,
    sq_floor: i64,
    exact: bool,
}

impl Radius {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidInput(format!("radius must be finite and >= 0, got {r}")));
        }
        let r2 = r * r;
        let m = r2.round();
        if (r2 - m).abs() <= 1e-9 * m.max(1.0) {
            Ok(Self { value: r, sq_floor: m as i64, exact: true })
        } else {
            Ok(Self { value: r, sq_floor: r2.floor() as i64, exact: false })
        }
    }

    pub fn from_squared(n: i64) -> Result<Self> {
        if n < 0 {
            return Err(Error::InvalidInput(format!("squared radius must be >= 0, got {n}")));
        }
        Ok(Self { value: (n as f64).sqrt(), sq_floor: n, exact: true })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn squared(&self) -> f64 {
        if self.exact {
            self.sq_floor as f64
        } else {
            self.value * self.value
        }
    }

    pub fn is_exact_square(&self) -> bool {
        self.exact
    }

    /// Largest integer `n` with `n ≤ r²`.
    pub fn sq_floor(&self) -> i64 {
        self.sq_floor
    }

    /// `n ≤ r²`
    pub fn contains_sq(&self, n: i64) -> bool {
        n <= self.sq_floor
    }

    /// `n ≥ r²`
    pub fn reaches_sq(&self, n: i64) -> bool {
        if self.exact {
            n >= self.sq_floor
        } else {
            n > self.sq_floor
        }
    }

    /// `n < r²`
    pub fn strictly_contains_sq(&self, n: i64) -> bool {
        !self.reaches_sq(n)
    }

    /// Integer bound `B` with `|x| ≤ B` for every `x² ≤ r²`.
    pub fn box_bound(&self) -> i64 {
        (self.sq_floor.max(0) as u64).isqrt() as i64
    }
}

pub fn kappa0() -> f64 {
    (3.0 / (4.0 * PI)).cbrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiSetup {
    pub k_f: Radius,
    pub n: u64,
    pub hbar: f64,
    pub kappa: f64,
    pub kappa0: f64,
}

pub fn build_setup(k_f: Radius) -> FermiSetup {
    let n = lattice::ball_count(k_f);
    let hbar = (n as f64).cbrt().recip();
    FermiSetup { k_f, n, hbar, kappa: k_f.value() * hbar, kappa0: kappa0() }
}

impl FermiSetup {
    pub fn new(k_f: f64) -> Result<Self> {
        Ok(build_setup(Radius::new(k_f)?))
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Zero,
    CompactSupport { c: f64, k0: f64 },
    Exponential { c: f64, a: f64 },
    PowerLaw { c: f64, s: f64 },
}

/// Radial potential `V̂(|k|)` together with the largest `|k|` at which it may
/// be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub family: Family,
    pub cutoff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summability {
    /// Σ_{0<|k|≤K/2} |k|·V̂(k) and Σ_{0<|k|≤K} |k|·V̂(k)
    pub linear_half: f64,
    pub linear_full: f64,
    /// Same with V̂(k)²
    pub quadratic_half: f64,
    pub quadratic_full: f64,
    /// Upper bound on Σ_{|k|>K} |k|·V̂(k)²
    pub quadratic_tail: f64,
}

const SHIFT: f64 = 0.866_025_403_784_438_6; // half the diagonal of a unit cube

impl Potential {
    pub fn new(family: Family, cutoff: f64) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(cutoff.is_finite() && cutoff >= 0.0) {
            return bad("cutoff must be finite and >= 0");
        }
        match family {
            Family::Zero => {}
            Family::CompactSupport { c, k0 } => {
                if !(c >= 0.0 && k0 >= 0.0 && c.is_finite() && k0.is_finite()) {
                    return bad("compact support needs c >= 0 and k0 >= 0");
                }
            }
            Family::Exponential { c, a } => {
                if !(c >= 0.0 && a > 0.0 && c.is_finite() && a.is_finite()) {
                    return bad("exponential family needs c >= 0 and a > 0");
                }
            }
            Family::PowerLaw { c, s } => {
                if !(c >= 0.0 && s > 2.0 && c.is_finite() && s.is_finite()) {
                    return bad("power law needs c >= 0 and s > 2");
                }
            }
        }
        Ok(Self { family, cutoff })
    }

    pub fn zero() -> Self {
        Self { family: Family::Zero, cutoff: f64::INFINITY }
    }

    pub fn is_zero(&self) -> bool {
        match self.family {
            Family::Zero => true,
            Family::CompactSupport { c, .. } | Family::Exponential { c, .. } | Family::PowerLaw { c, .. } => {
                c == 0.0
            }
        }
    }

    /// Family value at radius `r`, ignoring the cutoff.
    pub fn radial(&self, r: f64) -> f64 {
        match self.family {
            Family::Zero => 0.0,
            Family::CompactSupport { c, k0 } => {
                if r <= k0 * (1.0 + 1e-12) {
                    c
                } else {
                    0.0
                }
            }
            Family::Exponential { c, a } => c * (-a * r).exp(),
            Family::PowerLaw { c, s } => c * (1.0 + r).powf(-s),
        }
    }

    pub fn at(&self, k: IVec3) -> f64 {
        self.radial((norm2(k) as f64).sqrt())
    }

    pub fn checked(&self, k: IVec3) -> Result<f64> {
        let r = (norm2(k) as f64).sqrt();
        if r > self.cutoff * (1.0 + 1e-12) {
            return Err(Error::OutOfRange { norm: r, cutoff: self.cutoff });
        }
        Ok(self.radial(r))
    }

    pub fn scaled(&self, eps: f64) -> Self {
        let family = match self.family {
            Family::Zero => Family::Zero,
            Family::CompactSupport { c, k0 } => Family::CompactSupport { c: c * eps, k0 },
            Family::Exponential { c, a } => Family::Exponential { c: c * eps, a },
            Family::PowerLaw { c, s } => Family::PowerLaw { c: c * eps, s },
        };
        Self { family, cutoff: self.cutoff }
    }

    /// Upper bound on Σ_{|k|>K} |k|·V̂(k)^power for the monotone families.
    ///
    /// Each lattice point owns the unit cube around it, which lies in the
    /// shell `|k| ± √3/2`, so the sum is dominated by
    /// ∫_{K−s}^∞ 4πr²(r+s)·V̂(r−s)^power dr.
    pub fn tail_bound(&self, k_max: f64, power: i32, ctl: &QuadControl) -> Result<f64> {
        match self.family {
            Family::Zero => return Ok(0.0),
            Family::CompactSupport { c, k0 } => {
                if c == 0.0 || k_max >= k0 {
                    return Ok(0.0);
                }
            }
            _ => {
                if self.is_zero() {
                    return Ok(0.0);
                }
            }
        }
        let s = SHIFT;
        let r0 = k_max - s;
        let f = |x: f64| {
            let r = x + r0.max(0.0);
            let vr = self.radial((r - s).max(0.0));
            4.0 * PI * r * r * (r + s) * vr.powi(power)
        };
        let ctl = QuadControl { abs_tol: 1e-300, rel_tol: 1e-8, lambda_max: 1e8, ..*ctl };
        let res = quad::integrate_to_lambda(f, &ctl)?;
        Ok(res.value + res.error)
    }

    pub fn summability(&self, ctl: &QuadControl) -> Result<Summability> {
        if !self.cutoff.is_finite() {
            return Err(Error::InvalidInput("summability needs a finite cutoff".into()));
        }
        let full = Radius::new(self.cutoff)?;
        let half = Radius::new(0.5 * self.cutoff)?;
        let shells = lattice::shell_counts(full.sq_floor());
        let mut out = Summability {
            linear_half: 0.0,
            linear_full: 0.0,
            quadratic_half: 0.0,
            quadratic_full: 0.0,
            quadratic_tail: self.tail_bound(self.cutoff, 2, ctl)?,
        };
        for (m, &count) in shells.iter().enumerate().skip(1) {
            if count == 0 {
                continue;
            }
            let r = (m as f64).sqrt();
            let v = self.radial(r);
            let lin = count as f64 * r * v;
            let sq = count as f64 * r * v * v;
            out.linear_full += lin;
            out.quadratic_full += sq;
            if half.contains_sq(m as i64) {
                out.linear_half += lin;
                out.quadratic_half += sq;
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfEnergy {
    pub kinetic: f64,
    pub direct: f64,
    pub exchange: f64,
    pub total: f64,
}

/// Table of `V̂(q)` on the cube `|q_i| ≤ half`, indexed like a histogram.
struct DiffGrid {
    half: i64,
    side: usize,
}

impl DiffGrid {
    fn index(&self, q: IVec3) -> usize {
        let s = self.side as i64;
        (((q[0] + self.half) * s + (q[1] + self.half)) * s + (q[2] + self.half)) as usize
    }
    fn point(&self, idx: usize) -> IVec3 {
        let s = self.side;
        [
            (idx / (s * s)) as i64 - self.half,
            ((idx / s) % s) as i64 - self.half,
            (idx % s) as i64 - self.half,
        ]
    }
    fn len(&self) -> usize {
        self.side.pow(3)
    }
}

fn potential_table(pot: &Potential, grid: &DiffGrid, reach: i64) -> Result<Vec<f64>> {
    let mut table = vec![0.0; grid.len()];
    for (i, slot) in table.iter_mut().enumerate() {
        let q = grid.point(i);
        let q2 = norm2(q);
        if q2 <= reach {
            *slot = pot.checked(q)?;
        }
    }
    Ok(table)
}

fn kinetic_and_direct(setup: &FermiSetup, ball: &[IVec3], pot: &Potential) -> Result<(f64, f64)> {
    let h2 = setup.hbar * setup.hbar;
    let kinetic: f64 = ball.iter().map(|&p| h2 * norm2(p) as f64).sum();
    let direct = 0.5 * setup.n_f64() * pot.checked([0, 0, 0])?;
    Ok((kinetic, direct))
}

/// Multiplicities of `q = k − k'` over ordered pairs of the Fermi ball.
pub fn difference_histogram(k_f: Radius) -> (i64, Vec<u64>) {
    let ball = lattice::fermi_ball(k_f).points;
    let half = 2 * k_f.box_bound();
    let grid = DiffGrid { half, side: (2 * half + 1) as usize };
    let counts = ball
        .par_chunks(256)
        .fold(
            || vec![0u64; grid.len()],
            |mut acc, chunk| {
                for &k in chunk {
                    for &kp in &ball {
                        acc[grid.index(lattice::sub(k, kp))] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; grid.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    (half, counts)
}

/// Hartree–Fock energy of the filled Fermi ball from the difference histogram.
pub fn hartree_fock_energy(setup: &FermiSetup, pot: &Potential) -> Result<HfEnergy> {
    let ball = lattice::fermi_ball(setup.k_f).points;
    let (kinetic, direct) = kinetic_and_direct(setup, &ball, pot)?;
    let (half, counts) = difference_histogram(setup.k_f);
    let grid = DiffGrid { half, side: (2 * half + 1) as usize };
    let reach = 4 * setup.k_f.sq_floor();
    let table = potential_table(pot, &grid, reach)?;
    let sum: f64 = counts
        .iter()
        .zip(&table)
        .filter(|(c, _)| **c > 0)
        .map(|(&c, &v)| c as f64 * v)
        .sum();
    let exchange = -sum / (2.0 * setup.n_f64());
    Ok(HfEnergy { kinetic, direct, exchange, total: kinetic + direct + exchange })
}

/// Hartree–Fock energy from the plain double sum over the Fermi ball.
pub fn hartree_fock_direct(setup: &FermiSetup, pot: &Potential) -> Result<HfEnergy> {
    let ball = lattice::fermi_ball(setup.k_f).points;
    let (kinetic, direct) = kinetic_and_direct(setup, &ball, pot)?;
    let half = 2 * setup.k_f.box_bound();
    let grid = DiffGrid { half, side: (2 * half + 1) as usize };
    let table = potential_table(pot, &grid, 4 * setup.k_f.sq_floor())?;
    let rows: Vec<f64> = ball
        .par_iter()
        .map(|&k| ball.iter().map(|&kp| table[grid.index(lattice::sub(k, kp))]).sum())
        .collect();
    let sum: f64 = rows.iter().sum();
    let exchange = -sum / (2.0 * setup.n_f64());
    Ok(HfEnergy { kinetic, direct, exchange, total: kinetic + direct + exchange })
}

/// `g(λ) = 1 − λ·arctan(1/λ)`.
pub fn lindhard_g(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 2.0 {
        return 1.0 - lambda * (1.0 / lambda).atan();
    }
    // 1/(3λ²) − 1/(5λ⁴) + 1/(7λ⁶) − …
    let x = 1.0 / (lambda * lambda);
    let mut term = x;
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..40 {
        let add = sign * term / (2 * j + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 * sum.abs() {
            break;
        }
        term *= x;
        sign = -sign;
    }
    sum
}

fn log1p_minus_x(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let mut term = x * x;
        let mut sum = 0.0;
        let mut sign = -1.0;
        for j in 2..12 {
            sum += sign * term / j as f64;
            term *= x;
            sign = -sign;
        }
        sum
    } else {
        x.ln_1p() - x
    }
}

/// ∫₀^∞ g(λ) dλ over `[0, Λ]`; the exact value is π/4.
pub fn g_integral(ctl: &QuadControl) -> Result<QuadResult> {
    let mut r = quad::integrate_to_lambda(lindhard_g, ctl)?;
    r.error += 1.0 / (3.0 * ctl.lambda_max);
    Ok(r)
}

pub fn g_squared_integral(ctl: &QuadControl) -> Result<QuadResult> {
    quad::integrate_to_lambda(|l| lindhard_g(l).powi(2), ctl)
}

/// ∫₀^∞ log(1 + a·g(λ)) dλ over `[0, Λ]`, with the tail bound `a/(3Λ)`
/// folded into the error.
pub fn log_integral(a: f64, ctl: &QuadControl) -> Result<QuadResult> {
    if a == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let mut r = quad::integrate_to_lambda(|l| (a * lindhard_g(l)).ln_1p(), ctl)?;
    r.error += a / (3.0 * ctl.lambda_max);
    Ok(r)
}

/// `(1/π)∫₀^∞ log(1 + 2πκV̂·g) dλ − (π/2)κV̂`.
///
/// Evaluated as `(1/π)∫[log(1+x) − x]dλ` with `x = 2πκV̂·g`, which is the same
/// number because ∫g = π/4, but keeps full relative accuracy at weak coupling.
pub fn rpa_term(kappa: f64, vhat: f64, ctl: &QuadControl) -> Result<QuadResult> {
    let a = 2.0 * PI * kappa * vhat;
    if a == 0.0 {
        return Ok(QuadResult { value: 0.0, error: 0.0, intervals: 0 });
    }
    let ctl = QuadControl { abs_tol: ctl.abs_tol * a * a, ..*ctl };
    let mut r = quad::integrate_to_lambda(|l| log1p_minus_x(a * lindhard_g(l)), &ctl)?;
    r.error += a * a / (54.0 * ctl.lambda_max.powi(3));
    r.value /= PI;
    r.error /= PI;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellTerm {
    pub norm_sq: i64,
    pub count: u64,
    pub vhat: f64,
    /// ħκ₀|k|·(per-k term), summed over the shell
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RpaClosed {
    pub total: f64,
    pub quad_error: f64,
    pub k_max: f64,
    pub k_tail_bound: f64,
    pub shells: Vec<ShellTerm>,
}

/// Closed-form RPA energy summed over `0 < |k| ≤ pot.cutoff`.
pub fn rpa_closed_form(setup: &FermiSetup, pot: &Potential, ctl: &QuadControl, tail_tol: f64) -> Result<RpaClosed> {
    if !pot.cutoff.is_finite() {
        return Err(Error::InvalidInput("RPA k-sum needs a finite cutoff".into()));
    }
    let k0 = setup.kappa0;
    let pref = setup.hbar * k0;
    let gsq = g_squared_integral(ctl)?;
    let per_sq = pref * (2.0 * PI * k0).powi(2) * (gsq.value + gsq.error) / (2.0 * PI);
    let k_tail_bound = per_sq * pot.tail_bound(pot.cutoff, 2, ctl)?;
    if k_tail_bound > tail_tol {
        return Err(Error::NonConvergent { tail: k_tail_bound, tol: tail_tol, cutoff: pot.cutoff });
    }
    let rk = Radius::new(pot.cutoff)?;
    let counts = lattice::shell_counts(rk.sq_floor());
    let shells: Vec<(i64, u64)> = counts
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &c)| c > 0)
        .map(|(m, &c)| (m as i64, c))
        .collect();
    let terms: Vec<Result<(ShellTerm, f64)>> = shells
        .par_iter()
        .map(|&(m, count)| {
            let r = (m as f64).sqrt();
            let vhat = pot.radial(r);
            let t = rpa_term(k0, vhat, ctl)?;
            let w = pref * r * count as f64;
            Ok((ShellTerm { norm_sq: m, count, vhat, contribution: w * t.value }, w * t.error))
        })
        .collect();
    let mut out = RpaClosed { total: 0.0, quad_error: 0.0, k_max: pot.cutoff, k_tail_bound, shells: Vec::new() };
    for t in terms {
        let (s, e) = t?;
        out.total += s.contribution;
        out.quad_error += e;
        out.shells.push(s);
    }
    Ok(out)
}

/// `E^RPA(ε·V̂)/ε²`.
pub fn rpa_small_coupling_ratio(setup: &FermiSetup, pot: &Potential, eps: f64, ctl: &QuadControl) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps must be > 0, got {eps}")));
    }
    let e = rpa_closed_form(setup, &pot.scaled(eps), ctl, f64::INFINITY)?;
    Ok(e.total / (eps * eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_snaps_irrational_squares() {
        let r = Radius::new(2f64.sqrt()).unwrap();
        assert!(r.is_exact_square());
        assert!(r.contains_sq(2));
        assert!(!r.contains_sq(3));
        let r = Radius::new(1.5).unwrap();
        assert!(!r.is_exact_square());
        assert!(r.contains_sq(2) && !r.contains_sq(3));
        assert!(r.reaches_sq(3) && !r.reaches_sq(2));
        assert!(Radius::new(-1.0).is_err());
    }

    #[test]
    fn setup_small_balls() {
        assert_eq!(FermiSetup::new(0.0).unwrap().n, 1);
        assert_eq!(FermiSetup::new(1.0).unwrap().n, 7);
        assert_eq!(FermiSetup::new(2.0).unwrap().n, 33);
        let s = FermiSetup::new(3.0).unwrap();
        assert_eq!(s.hbar, (s.n as f64).cbrt().recip());
        assert_eq!(s.kappa, 3.0 * s.hbar);
    }

    #[test]
    fn g_endpoints_and_branch_continuity() {
        assert_eq!(lindhard_g(0.0), 1.0);
        let below = 1.0 - 1.999_999_999 * (1.0f64 / 1.999_999_999).atan();
        assert!((lindhard_g(2.0) - below).abs() < 1e-9);
        assert!((lindhard_g(1e6) * 3e12 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log1p_series_matches() {
        for &x in &[1e-3, -5e-3, 9e-3] {
            let a: f64 = x;
            assert!((log1p_minus_x(a) - (a.ln_1p() - a)).abs() < 1e-15);
        }
    }

    #[test]
    fn rpa_term_forms_agree() {
        let ctl = QuadControl::default();
        let k = kappa0();
        for &v in &[0.05, 0.5, 3.0] {
            let a = 2.0 * PI * k * v;
            let direct = log_integral(a, &ctl).unwrap().value / PI - 0.5 * PI * k * v;
            let stable = rpa_term(k, v, &ctl).unwrap().value;
            assert!((direct - stable).abs() < 1e-10 * (1.0 + stable.abs()), "{direct} {stable}");
        }
    }

    #[test]
    fn invalid_families_rejected() {
        assert!(Potential::new(Family::PowerLaw { c: 1.0, s: 2.0 }, 10.0).is_err());
        assert!(Potential::new(Family::Exponential { c: -1.0, a: 1.0 }, 10.0).is_err());
        assert!(Potential::new(Family::CompactSupport { c: 1.0, k0: 2.0 }, 10.0).is_ok());
    }
}
