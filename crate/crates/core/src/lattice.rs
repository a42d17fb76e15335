//! Exact lattice-point counting on ℤ³ and ℤ².

use crate::error::{Error, Result};
use crate::model::Radius;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::PI;

pub type IVec3 = [i64; 3];

pub fn norm2(p: IVec3) -> i64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

pub fn dot(p: IVec3, q: IVec3) -> i64 {
    p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
}

pub fn add(p: IVec3, q: IVec3) -> IVec3 {
    [p[0] + q[0], p[1] + q[1], p[2] + q[2]]
}

pub fn sub(p: IVec3, q: IVec3) -> IVec3 {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

pub fn neg(p: IVec3) -> IVec3 {
    [-p[0], -p[1], -p[2]]
}

pub fn norm(p: IVec3) -> f64 {
    (norm2(p) as f64).sqrt()
}

/// Lexicographic half-space rule: `k₃ > 0`, or `k₃ = 0, k₂ > 0`, or
/// `k₃ = k₂ = 0, k₁ > 0`.
pub fn is_north(k: IVec3) -> bool {
    k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)))
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumSet {
    pub points: Vec<IVec3>,
    pub descriptor: String,
}

impl MomentumSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Re-checks sortedness, uniqueness and the defining predicate.
    pub fn verify<F: Fn(IVec3) -> bool>(&self, pred: F) -> bool {
        self.points.windows(2).all(|w| w[0] < w[1]) && self.points.iter().all(|&p| pred(p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub exact: u64,
    pub predicted: f64,
    pub error: f64,
    pub params: BTreeMap<String, f64>,
}

impl CountReport {
    fn new(exact: u64, predicted: f64, params: &[(&str, f64)]) -> Self {
        Self {
            exact,
            predicted,
            error: exact as f64 - predicted,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }
}

pub fn ball_count(r: Radius) -> u64 {
    let sq = r.sq_floor();
    let b = r.box_bound();
    (-b..=b)
        .map(|x| {
            let mut c = 0u64;
            for y in -b..=b {
                let rem = sq - x * x - y * y;
                if rem >= 0 {
                    c += 2 * (rem as u64).isqrt() + 1;
                }
            }
            c
        })
        .sum()
}

/// `|{p : |p|² = m}|` for `0 ≤ m ≤ max_sq`.
pub fn shell_counts(max_sq: i64) -> Vec<u64> {
    let max_sq = max_sq.max(0);
    let mut out = vec![0u64; max_sq as usize + 1];
    let b = (max_sq as u64).isqrt() as i64;
    for x in -b..=b {
        for y in -b..=b {
            let xy = x * x + y * y;
            if xy > max_sq {
                continue;
            }
            for z in -b..=b {
                let m = xy + z * z;
                if m <= max_sq {
                    out[m as usize] += 1;
                }
            }
        }
    }
    out
}

pub fn fermi_ball(k_f: Radius) -> MomentumSet {
    let b = k_f.box_bound();
    let mut points = Vec::with_capacity(ball_count(k_f) as usize);
    for x in -b..=b {
        for y in -b..=b {
            for z in -b..=b {
                let p = [x, y, z];
                if k_f.contains_sq(norm2(p)) {
                    points.push(p);
                }
            }
        }
    }
    MomentumSet { points, descriptor: format!("|p|^2 <= {} (k_F = {})", k_f.squared(), k_f.value()) }
}

/// Particle momenta of `b*(k)`: `p ∉ B_F` with `p − k ∈ B_F`.
pub fn pair_support(k: IVec3, k_f: Radius) -> MomentumSet {
    let mut points: Vec<IVec3> = fermi_ball(k_f)
        .points
        .into_iter()
        .map(|h| add(h, k))
        .filter(|&p| !k_f.contains_sq(norm2(p)))
        .collect();
    points.sort_unstable();
    MomentumSet {
        points,
        descriptor: format!("|p|^2 > {0} and |p - {k:?}|^2 <= {0}", k_f.squared()),
    }
}

/// Multiplicity of each gap `m = p² − (p−k)²` over the pair support.
pub fn inverse_gap_histogram(k: IVec3, k_f: Radius) -> BTreeMap<i64, u64> {
    let mut hist = BTreeMap::new();
    for h in fermi_ball(k_f).points {
        let p = add(h, k);
        let p2 = norm2(p);
        if k_f.contains_sq(p2) {
            continue;
        }
        let m = p2 - norm2(h);
        assert!(m >= 1, "gap {m} below 1 at p = {p:?}");
        *hist.entry(m).or_insert(0) += 1;
    }
    hist
}

/// Σ 1/(p² − (p−k)²) over the pair support, restricted to gaps `≤ m_max`.
pub fn sum_inverse_gap_upto(k: IVec3, k_f: Radius, m_max: i64) -> f64 {
    inverse_gap_histogram(k, k_f)
        .into_iter()
        .take_while(|&(m, _)| m <= m_max)
        .map(|(m, c)| c as f64 / m as f64)
        .sum()
}

pub fn sum_inverse_gap(k: IVec3, k_f: Radius) -> f64 {
    sum_inverse_gap_upto(k, k_f, i64::MAX)
}

/// Axis of the largest `|k_i|`, ties to the lowest index, and the other two.
fn dominant_axis(k: IVec3) -> (usize, usize, usize) {
    let mut j = 0;
    for i in 1..3 {
        if k[i].abs() > k[j].abs() {
            j = i;
        }
    }
    let others: Vec<usize> = (0..3).filter(|&i| i != j).collect();
    (j, others[0], others[1])
}

/// Lattice points on the plane `2p·k − |k|² = m` inside `|p_i| ≤ bound`,
/// enumerated by solving for the dominant coordinate.
fn plane_points<F: FnMut(IVec3)>(k: IVec3, m: i64, bound: i64, mut visit: F) {
    let (j, a, b) = dominant_axis(k);
    let kk = norm2(k);
    let den = 2 * k[j];
    for qa in -bound..=bound {
        for qb in -bound..=bound {
            let num = m + kk - 2 * (k[a] * qa + k[b] * qb);
            if num % den != 0 {
                continue;
            }
            let mut p = [0; 3];
            p[j] = num / den;
            p[a] = qa;
            p[b] = qb;
            visit(p);
        }
    }
}

/// `|{p : k_F² < p² ≤ k_F² + m, 2p·k − k² = m}|`.
pub fn count_bm(k: IVec3, m: i64, k_f: Radius) -> Result<CountReport> {
    if k == [0, 0, 0] || m < 1 {
        return Err(Error::InvalidInput("count_bm needs k != 0 and m >= 1".into()));
    }
    let top = k_f.sq_floor() + m;
    let bound = (top as u64).isqrt() as i64;
    let mut exact = 0u64;
    plane_points(k, m, bound, |p| {
        let p2 = norm2(p);
        if !k_f.contains_sq(p2) && p2 <= top {
            exact += 1;
        }
    });
    let (j, _, _) = dominant_axis(k);
    let predicted = PI * (k[j].abs() as f64 / norm(k)) * m as f64;
    Ok(CountReport::new(exact, predicted, &[("m", m as f64), ("k_f", k_f.value())]))
}

/// `|{q : k_F − w ≤ |q| ≤ k_F + w, 2q·k − k² = m}|`.
pub fn count_equator_strip(k: IVec3, m: i64, halfwidth: f64, k_f: Radius) -> Result<CountReport> {
    if k == [0, 0, 0] || !(halfwidth >= 0.0) {
        return Err(Error::InvalidInput("equator strip needs k != 0 and halfwidth >= 0".into()));
    }
    let outer = Radius::new(k_f.value() + halfwidth)?;
    let inner = if k_f.value() > halfwidth { Some(Radius::new(k_f.value() - halfwidth)?) } else { None };
    let mut exact = 0u64;
    plane_points(k, m, outer.box_bound(), |q| {
        let q2 = norm2(q);
        if outer.contains_sq(q2) && inner.is_none_or(|r| r.reaches_sq(q2)) {
            exact += 1;
        }
    });
    let kk = norm2(k);
    let g = gcd(gcd(k[0], k[1]), k[2]);
    let rhs = m + kk;
    let predicted = if rhs % 2 == 0 && (rhs / 2) % g == 0 {
        let t = rhs as f64 / (2.0 * norm(k));
        let lo = (k_f.value() - halfwidth).max(0.0);
        let hi = k_f.value() + halfwidth;
        let area = PI * ((hi * hi - t * t).max(0.0) - (lo * lo - t * t).max(0.0));
        area * g as f64 / norm(k)
    } else {
        0.0
    };
    Ok(CountReport::new(
        exact,
        predicted,
        &[("m", m as f64), ("halfwidth", halfwidth), ("k_f", k_f.value())],
    ))
}

/// `|{q ∈ ℤ² : r_in ≤ a²(q₂+s₂)² + (q₃+s₃)² ≤ r_out}|`.
pub fn ellipse_annulus_count(a: f64, r_in: f64, r_out: f64, shift: [f64; 2]) -> Result<CountReport> {
    if !(a > 0.0) || !(r_in >= 0.0) || r_in > r_out || !r_out.is_finite() {
        return Err(Error::InvalidInput(format!("bad ellipse annulus a={a} r_in={r_in} r_out={r_out}")));
    }
    let t2 = (r_out.sqrt() / a).ceil() as i64 + 1;
    let t3 = r_out.sqrt().ceil() as i64 + 1;
    let c2 = -shift[0].round() as i64;
    let c3 = -shift[1].round() as i64;
    let exact: u64 = (c2 - t2..=c2 + t2)
        .into_par_iter()
        .map(|q2| {
            let x = q2 as f64 + shift[0];
            let x = a * a * x * x;
            if x > r_out {
                return 0;
            }
            let mut c = 0u64;
            for q3 in c3 - t3..=c3 + t3 {
                let y = q3 as f64 + shift[1];
                let v = x + y * y;
                if v >= r_in && v <= r_out {
                    c += 1;
                }
            }
            c
        })
        .sum();
    let predicted = PI * (r_out - r_in) / a;
    Ok(CountReport::new(exact, predicted, &[("a", a), ("r_in", r_in), ("r_out", r_out)]))
}

/// Least-squares slope of `log|error|` against `log R`, skipping zero errors.
pub fn fit_error_exponent(data: &[(f64, CountReport)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = data
        .iter()
        .filter(|(_, c)| c.error != 0.0)
        .map(|(r, c)| (r.ln(), c.error.abs().ln()))
        .collect();
    if !data.is_empty() && pts.is_empty() {
        return Err(Error::DegenerateFit);
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable scales, need 3", pts.len())));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 10f64.ln() * (1.0 - 1e-12) {
        return Err(Error::InsufficientData("scales span less than a decade".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(x: f64) -> Radius {
        Radius::new(x).unwrap()
    }

    #[test]
    fn ball_sizes() {
        assert_eq!(fermi_ball(r(0.0)).points, vec![[0, 0, 0]]);
        assert_eq!(fermi_ball(r(1.0)).len(), 7);
        assert_eq!(fermi_ball(r(2f64.sqrt())).len(), 19);
        for kf in [0.0, 1.0, 2.5, 7.3] {
            assert_eq!(fermi_ball(r(kf)).len() as u64, ball_count(r(kf)));
        }
    }

    #[test]
    fn shell_counts_small() {
        let s = shell_counts(3);
        assert_eq!(s, vec![1, 6, 12, 8]);
    }

    #[test]
    fn pair_support_zero_k_empty() {
        assert!(pair_support([0, 0, 0], r(3.0)).is_empty());
    }

    #[test]
    fn gauss_circle_25() {
        let c = ellipse_annulus_count(1.0, 0.0, 25.0, [0.0, 0.0]).unwrap();
        assert_eq!(c.exact, 81);
        let c = ellipse_annulus_count(1.0, 0.0, 0.0, [0.0, 0.0]).unwrap();
        assert_eq!(c.exact, 1);
        assert!(ellipse_annulus_count(1.0, 2.0, 1.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn bm_parity_obstruction() {
        // 2p·k − k² is even when all components of k are even
        let c = count_bm([2, 0, 2], 3, r(4.0)).unwrap();
        assert_eq!(c.exact, 0);
    }

    #[test]
    fn synthetic_exponent() {
        let data: Vec<(f64, CountReport)> = [10.0, 30.0, 100.0, 300.0]
            .iter()
            .map(|&s| (s, CountReport::new(0, -2.5 * s, &[])))
            .collect();
        assert!((fit_error_exponent(&data).unwrap() - 1.0).abs() < 1e-9);
        let zero: Vec<(f64, CountReport)> =
            [10.0, 100.0, 1000.0].iter().map(|&s| (s, CountReport::new(0, 0.0, &[]))).collect();
        assert_eq!(fit_error_exponent(&zero), Err(Error::DegenerateFit));
    }
}
