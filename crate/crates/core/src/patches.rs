//! Patch decomposition of a shell around the Fermi sphere, the index sets
//! `I_k^±` and the per-patch pair counts `n_α(k)`.
//!
//! The northern hemisphere is split into `M/2` cells of equal area: a polar
//! cap followed by latitude collars, each collar cut into equal-angle
//! sectors. Every cell is shrunk by half the corridor angle on each side. The
//! southern cells are the point reflections of the northern ones, and a
//! lattice point belongs to southern cell `β` exactly when its negative
//! belongs to the mirrored northern cell.

use crate::error::{Error, Result};
use crate::lattice::{is_north, neg, norm, norm2, sub, IVec3, MomentumSet};
use crate::model::{FermiSetup, Radius};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchConfig {
    /// Number of patches, even.
    pub m: usize,
    /// Radial half-thickness of the shell.
    pub shell_halfwidth: f64,
    /// Corridor width at the Fermi sphere, in lattice units.
    pub corridor: f64,
    pub delta: f64,
    pub r_cut: f64,
}

impl PatchConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if self.m < 2 || !self.m.is_multiple_of(2) {
            return bad(format!("patch count must be even and >= 2, got {}", self.m));
        }
        if !(self.shell_halfwidth > 0.0) {
            return bad("shell half-width must be positive".into());
        }
        if !(self.r_cut > 0.0) {
            return bad("R_cut must be positive".into());
        }
        if !(self.corridor > self.r_cut) {
            return bad(format!("corridor {} must exceed R_cut {}", self.corridor, self.r_cut));
        }
        if !(self.delta >= 0.0) {
            return bad("delta must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    pub index: usize,
    pub center: [f64; 3],
    /// Polar-angle band of the northern cell this patch is (a mirror of).
    pub theta: (f64, f64),
    /// Azimuthal sector; `None` for a cap or a full collar.
    pub phi: Option<(f64, f64)>,
    pub solid_angle: f64,
    pub south: bool,
}

#[derive(Debug, Clone, PartialEq)]
struct Collar {
    theta: (f64, f64),
    cells: usize,
    first: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchDecomposition {
    pub cfg: PatchConfig,
    pub k_f: Radius,
    pub patches: Vec<Patch>,
    /// Half the corridor angle.
    pub half_angle: f64,
    collars: Vec<Collar>,
    outer: Radius,
    inner: Option<Radius>,
}

/// Cap plus collars for `h` equal-area cells on the upper hemisphere.
fn layout(h: usize) -> Vec<Collar> {
    if h == 1 {
        return vec![Collar { theta: (0.0, FRAC_PI_2), cells: 1, first: 0 }];
    }
    let area = 2.0 * PI / h as f64;
    let theta_c = (1.0 - 1.0 / h as f64).acos();
    let rest = h - 1;
    let ncol = (((FRAC_PI_2 - theta_c) / area.sqrt()).round() as usize).clamp(1, rest);
    let step = (FRAC_PI_2 - theta_c) / ncol as f64;
    let mut counts = Vec::with_capacity(ncol);
    let mut carry = 0.0;
    for j in 0..ncol {
        let t1 = theta_c + j as f64 * step;
        let t2 = theta_c + (j + 1) as f64 * step;
        let ideal = 2.0 * PI * (t1.cos() - t2.cos()) / area + carry;
        let n = (ideal.round() as usize).max(1);
        carry = ideal - n as f64;
        counts.push(n);
    }
    // the rounded counts must exhaust the hemisphere
    let assigned: usize = counts.iter().sum();
    let last = counts.len() - 1;
    if assigned > rest {
        let over = assigned - rest;
        counts[last] = counts[last].saturating_sub(over);
    } else {
        counts[last] += rest - assigned;
    }
    counts.retain(|&n| n > 0);
    let mut collars = vec![Collar { theta: (0.0, theta_c), cells: 1, first: 0 }];
    let mut cum = 1usize;
    for n in counts {
        let z_top = 1.0 - cum as f64 / h as f64;
        cum += n;
        let z_bot = 1.0 - cum as f64 / h as f64;
        let t2 = if cum == h { FRAC_PI_2 } else { z_bot.acos() };
        collars.push(Collar { theta: (z_top.acos(), t2), cells: n, first: cum - n });
    }
    collars
}

fn cell_center(theta: (f64, f64), phi: Option<(f64, f64)>) -> [f64; 3] {
    let (t1, t2) = theta;
    let Some((p1, p2)) = phi else { return [0.0, 0.0, 1.0] };
    let dphi = p2 - p1;
    let z = dphi * (t2.sin().powi(2) - t1.sin().powi(2)) / 2.0;
    let prim = |t: f64| t / 2.0 - (2.0 * t).sin() / 4.0;
    let radial = 2.0 * (dphi / 2.0).sin() * (prim(t2) - prim(t1));
    let mid = 0.5 * (p1 + p2);
    let v = [radial * mid.cos(), radial * mid.sin(), z];
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub fn build_decomposition(cfg: &PatchConfig, setup: &FermiSetup) -> Result<PatchDecomposition> {
    cfg.validate()?;
    let k_f = setup.k_f;
    if !(k_f.value() > 0.0) {
        return Err(Error::InvalidInput("patches need k_F > 0".into()));
    }
    let h = cfg.m / 2;
    let half_angle = cfg.corridor / (2.0 * k_f.value());
    let collars = layout(h);
    let mut north = Vec::with_capacity(h);
    for c in &collars {
        let (t1, t2) = c.theta;
        let band = t2 - t1 - if t1 == 0.0 { half_angle } else { 2.0 * half_angle };
        if band <= 0.0 {
            return Err(Error::Infeasible(format!(
                "corridor angle {:.4} leaves no room in band ({t1:.4}, {t2:.4})",
                2.0 * half_angle
            )));
        }
        let dphi = 2.0 * PI / c.cells as f64;
        if c.cells > 1 && (t2 - half_angle).sin() * (dphi / 2.0).min(FRAC_PI_2).sin() <= half_angle.sin() {
            return Err(Error::Infeasible(format!("corridor wider than the sectors of band ({t1:.4}, {t2:.4})")));
        }
        for i in 0..c.cells {
            let phi = (c.cells > 1).then(|| (i as f64 * dphi, (i + 1) as f64 * dphi));
            north.push(Patch {
                index: c.first + i,
                center: cell_center(c.theta, phi),
                theta: c.theta,
                phi,
                solid_angle: dphi * (t1.cos() - t2.cos()),
                south: false,
            });
        }
    }
    let mut patches = north.clone();
    for p in &north {
        patches.push(Patch {
            index: p.index + h,
            center: [-p.center[0], -p.center[1], -p.center[2]],
            south: true,
            ..p.clone()
        });
    }
    let outer = Radius::new(k_f.value() + cfg.shell_halfwidth)?;
    let inner = if k_f.value() > cfg.shell_halfwidth {
        Some(Radius::new(k_f.value() - cfg.shell_halfwidth)?)
    } else {
        None
    };
    Ok(PatchDecomposition { cfg: *cfg, k_f, patches, half_angle, collars, outer, inner })
}

impl PatchDecomposition {
    pub fn m(&self) -> usize {
        self.cfg.m
    }

    pub fn mirror(&self, alpha: usize) -> usize {
        let h = self.cfg.m / 2;
        if alpha < h {
            alpha + h
        } else {
            alpha - h
        }
    }

    pub fn center(&self, alpha: usize) -> [f64; 3] {
        self.patches[alpha].center
    }

    /// Angular cell of a nonzero direction (no radial test).
    pub fn locate_direction(&self, p: IVec3) -> Option<usize> {
        if p == [0, 0, 0] {
            return None;
        }
        let (q, south) = if is_north(p) { (p, false) } else { (neg(p), true) };
        let (x, y, z) = (q[0] as f64, q[1] as f64, q[2] as f64);
        let theta = x.hypot(y).atan2(z);
        let h = self.half_angle;
        let collar = self.collars.iter().find(|c| {
            let (t1, t2) = c.theta;
            (theta > t1 || t1 == 0.0) && theta <= t2
        })?;
        let (t1, t2) = collar.theta;
        if (t1 > 0.0 && theta <= t1 + h) || theta > t2 - h {
            return None;
        }
        let mut offset = 0;
        if collar.cells > 1 {
            let mut phi = y.atan2(x);
            if phi <= 0.0 {
                phi += 2.0 * PI;
            }
            let dphi = 2.0 * PI / collar.cells as f64;
            let mut i = ((phi / dphi).ceil() as usize).saturating_sub(1).min(collar.cells - 1);
            // float rounding at a sector edge; keep the half-open convention
            if phi <= i as f64 * dphi && i > 0 {
                i -= 1;
            } else if phi > (i + 1) as f64 * dphi && i + 1 < collar.cells {
                i += 1;
            }
            if h > 0.0 {
                let s = theta.sin();
                let d1 = phi - i as f64 * dphi;
                let d2 = (i + 1) as f64 * dphi - phi;
                let sh = h.sin();
                if s * d1.min(FRAC_PI_2).sin() < sh || s * d2.min(FRAC_PI_2).sin() < sh {
                    return None;
                }
            }
            offset = i;
        }
        let alpha = collar.first + offset;
        Some(if south { alpha + self.cfg.m / 2 } else { alpha })
    }

    /// `k_F − w < |p| ≤ k_F + w`
    pub fn in_shell(&self, p: IVec3) -> bool {
        let p2 = norm2(p);
        self.outer.contains_sq(p2) && self.inner.is_none_or(|r| !r.contains_sq(p2))
    }

    /// Patch `B_α` containing `p`, if any.
    pub fn locate(&self, p: IVec3) -> Option<usize> {
        if !self.in_shell(p) {
            return None;
        }
        self.locate_direction(p)
    }

    pub fn labels(&self) -> PatchLabels {
        let b = self.outer.box_bound();
        let side = (2 * b + 1) as usize;
        let labels: Vec<i32> = (0..side * side * side)
            .into_par_iter()
            .map(|i| {
                let p = [
                    (i / (side * side)) as i64 - b,
                    ((i / side) % side) as i64 - b,
                    (i % side) as i64 - b,
                ];
                self.locate(p).map_or(-1, |a| a as i32)
            })
            .collect();
        PatchLabels { bound: b, side, labels, k_f: self.k_f, m: self.cfg.m }
    }

    /// Largest angular distance between sampled boundary points of any cell.
    pub fn max_angular_diameter(&self) -> f64 {
        let dir = |t: f64, p: f64| [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
        let mut best: f64 = 0.0;
        for c in &self.collars {
            let (t1, t2) = c.theta;
            if c.cells == 1 {
                let d = if t1 == 0.0 { 2.0 * t2 } else { PI };
                best = best.max(d.min(PI));
                continue;
            }
            let dphi = 2.0 * PI / c.cells as f64;
            let mut pts = Vec::new();
            for j in 0..=8 {
                let t = t1 + (t2 - t1) * j as f64 / 8.0;
                for l in 0..=8 {
                    pts.push(dir(t, dphi * l as f64 / 8.0));
                }
            }
            for a in &pts {
                for b in &pts {
                    let c = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0);
                    best = best.max(c.acos());
                }
            }
        }
        best
    }
}

/// Dense patch labels over the bounding box of the shell.
#[derive(Debug, Clone)]
pub struct PatchLabels {
    bound: i64,
    side: usize,
    labels: Vec<i32>,
    k_f: Radius,
    m: usize,
}

impl PatchLabels {
    pub fn get(&self, p: IVec3) -> Option<usize> {
        let b = self.bound;
        if p.iter().any(|&x| x < -b || x > b) {
            return None;
        }
        let s = self.side as i64;
        let i = (((p[0] + b) * s + (p[1] + b)) * s + (p[2] + b)) as usize;
        let l = self.labels[i];
        (l >= 0).then_some(l as usize)
    }

    /// `|{p ∈ B_α \ B_F : p − k ∈ B_α ∩ B_F}|` for every α.
    pub fn pair_counts(&self, k: IVec3) -> Vec<u64> {
        let b = self.bound;
        let side = self.side;
        (0..side)
            .into_par_iter()
            .fold(
                || vec![0u64; self.m],
                |mut acc, ix| {
                    let x = ix as i64 - b;
                    for y in -b..=b {
                        for z in -b..=b {
                            let p = [x, y, z];
                            let Some(a) = self.get(p) else { continue };
                            if self.k_f.contains_sq(norm2(p)) {
                                continue;
                            }
                            let h = sub(p, k);
                            if self.k_f.contains_sq(norm2(h)) && self.get(h) == Some(a) {
                                acc[a] += 1;
                            }
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0u64; self.m],
                |mut a, c| {
                    a.iter_mut().zip(c).for_each(|(x, y)| *x += y);
                    a
                },
            )
    }

    /// The pairs themselves, `(p, p − k)`, for patch `alpha`.
    pub fn pairs(&self, k: IVec3, alpha: usize) -> Vec<(IVec3, IVec3)> {
        let b = self.bound;
        let mut out = Vec::new();
        for x in -b..=b {
            for y in -b..=b {
                for z in -b..=b {
                    let p = [x, y, z];
                    if self.get(p) != Some(alpha) || self.k_f.contains_sq(norm2(p)) {
                        continue;
                    }
                    let h = sub(p, k);
                    if self.k_f.contains_sq(norm2(h)) && self.get(h) == Some(alpha) {
                        out.push((p, h));
                    }
                }
            }
        }
        out
    }
}

/// `{k : 0 < |k| < R_cut}` on the northern side of the lexicographic rule.
pub fn gamma_nor(r_cut: f64) -> Result<MomentumSet> {
    let r = Radius::new(r_cut)?;
    let b = r.box_bound();
    let mut points = Vec::new();
    for x in -b..=b {
        for y in -b..=b {
            for z in -b..=b {
                let k = [x, y, z];
                let k2 = norm2(k);
                if k2 > 0 && r.strictly_contains_sq(k2) && is_north(k) {
                    points.push(k);
                }
            }
        }
    }
    points.sort_unstable();
    Ok(MomentumSet { points, descriptor: format!("0 < |k| < {r_cut}, lexicographically north") })
}

/// Patches with `k·ω̂_α ≥ N^(−δ)`, ascending, and their mirrors in the same
/// order (which are exactly the patches with `k·ω̂_α ≤ −N^(−δ)`).
pub fn index_sets(k: IVec3, dec: &PatchDecomposition, setup: &FermiSetup) -> (Vec<usize>, Vec<usize>) {
    let t = setup.n_f64().powf(-dec.cfg.delta);
    let kf = [k[0] as f64, k[1] as f64, k[2] as f64];
    let plus: Vec<usize> = (0..dec.m())
        .filter(|&a| {
            let w = dec.center(a);
            kf[0] * w[0] + kf[1] * w[1] + kf[2] * w[2] >= t
        })
        .collect();
    let minus = plus.iter().map(|&a| dec.mirror(a)).collect();
    (plus, minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairMode {
    ExactLattice,
    Semiclassical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEntry {
    pub alpha: usize,
    pub mirror: usize,
    pub k_dot_omega: f64,
    /// `n_α(k)²`: exact lattice count, or the leading term in semiclassical mode
    pub n_sq: f64,
    pub n_asym_sq: f64,
}

impl PairEntry {
    pub fn n(&self) -> f64 {
        self.n_sq.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIndex {
    pub k: IVec3,
    pub mode: PairMode,
    /// `I_k^+` with counts; `I_k^−` is the list of mirrors, with equal counts.
    pub plus: Vec<PairEntry>,
    /// Patches of `I_k^+` dropped (with their mirrors) for having no pairs.
    pub dropped: Vec<usize>,
}

impl PairIndex {
    pub fn i_plus(&self) -> Vec<usize> {
        self.plus.iter().map(|e| e.alpha).collect()
    }

    pub fn i_minus(&self) -> Vec<usize> {
        self.plus.iter().map(|e| e.mirror).collect()
    }
}

pub fn asymptotic_n_sq(k_dot_omega: f64, setup: &FermiSetup, m: usize) -> f64 {
    4.0 * PI * setup.k_f.squared() * k_dot_omega.abs() / m as f64
}

/// Builds `I_k^±` with pair counts. `counts` are the exact counts of
/// [`PatchLabels::pair_counts`] for `+k`; they are required in exact mode.
pub fn pair_index(
    k: IVec3,
    dec: &PatchDecomposition,
    setup: &FermiSetup,
    mode: PairMode,
    counts: Option<&[u64]>,
) -> Result<PairIndex> {
    if k == [0, 0, 0] {
        return Err(Error::InvalidInput("pair index needs k != 0".into()));
    }
    let (plus, _) = index_sets(k, dec, setup);
    let mut entries = Vec::with_capacity(plus.len());
    let mut dropped = Vec::new();
    for a in plus {
        let w = dec.center(a);
        let kw = k[0] as f64 * w[0] + k[1] as f64 * w[1] + k[2] as f64 * w[2];
        let asym = asymptotic_n_sq(kw, setup, dec.m());
        let n_sq = match mode {
            PairMode::Semiclassical => asym,
            PairMode::ExactLattice => {
                let c = counts.ok_or_else(|| Error::InvalidInput("exact mode needs pair counts".into()))?;
                c[a] as f64
            }
        };
        if n_sq == 0.0 {
            dropped.push(a);
            continue;
        }
        entries.push(PairEntry { alpha: a, mirror: dec.mirror(a), k_dot_omega: kw, n_sq, n_asym_sq: asym });
    }
    Ok(PairIndex { k, mode, plus: entries, dropped })
}

/// Exact count for one patch, `n_α(k)²`, with the southern-side convention
/// that for `α ∈ I_k^−` the pairs are counted for `−k`.
pub fn pair_count(k: IVec3, alpha: usize, labels: &PatchLabels, dec: &PatchDecomposition) -> u64 {
    let w = dec.center(alpha);
    let kw = k[0] as f64 * w[0] + k[1] as f64 * w[1] + k[2] as f64 * w[2];
    let kk = if kw < 0.0 { neg(k) } else { k };
    labels.pairs(kk, alpha).len() as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeDiagnostics {
    pub n: u64,
    pub m: usize,
    pub delta: f64,
    pub r_cut: f64,
    /// `N^(2δ)R²/M`
    pub r1: f64,
    /// `M·R⁴/N^(2/3 − 2δ)`
    pub r2: f64,
    pub warnings: Vec<String>,
}

pub fn validate_regime(cfg: &PatchConfig, setup: &FermiSetup) -> RegimeDiagnostics {
    let n = setup.n_f64();
    let r = cfg.r_cut;
    let m = cfg.m as f64;
    let r1 = n.powf(2.0 * cfg.delta) * r * r / m;
    let r2 = m * r.powi(4) / n.powf(2.0 / 3.0 - 2.0 * cfg.delta);
    let mut warnings = Vec::new();
    if r1 > 0.1 {
        warnings.push(format!("N^(2δ)R²/M = {r1:.4} > 0.1"));
    }
    if r2 > 0.1 {
        warnings.push(format!("M·R⁴/N^(2/3−2δ) = {r2:.4} > 0.1"));
    }
    RegimeDiagnostics { n: setup.n, m: cfg.m, delta: cfg.delta, r_cut: cfg.r_cut, r1, r2, warnings }
}

pub const CACHE_FORMAT: &str = "bosonize-pair-counts";
pub const CACHE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheHeader {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
}

impl Default for CacheHeader {
    fn default() -> Self {
        Self {
            format: CACHE_FORMAT.into(),
            version: CACHE_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

/// Exact pair counts keyed by geometry and momentum.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairCache {
    pub header: CacheHeader,
    pub entries: BTreeMap<String, Vec<u64>>,
}

impl PairCache {
    pub fn key(k_f: Radius, cfg: &PatchConfig, k: IVec3) -> String {
        format!(
            "kf={:?};m={};w={:?};corridor={:?};k={},{},{}",
            k_f.value(),
            cfg.m,
            cfg.shell_halfwidth,
            cfg.corridor,
            k[0],
            k[1],
            k[2]
        )
    }

    /// Loads a cache file; a missing file, or one written by another format
    /// or tool version, yields an empty cache.
    pub fn load(path: &Path) -> Result<Self> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(Error::Cache(e.to_string())),
        };
        let cache: Self = serde_json::from_str(&text).map_err(|e| Error::Cache(e.to_string()))?;
        if cache.header != CacheHeader::default() {
            return Ok(Self::default());
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Cache(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::Cache(e.to_string()))
    }

    pub fn counts(&mut self, labels: &PatchLabels, dec: &PatchDecomposition, k: IVec3) -> Vec<u64> {
        let key = Self::key(dec.k_f, &dec.cfg, k);
        self.entries.entry(key).or_insert_with(|| labels.pair_counts(k)).clone()
    }
}

/// Unit vector of `k`.
pub fn unit(k: IVec3) -> [f64; 3] {
    let n = norm(k);
    [k[0] as f64 / n, k[1] as f64 / n, k[2] as f64 / n]
}

/// `k·p` for an integer `k` and a real direction.
pub fn kdot(k: IVec3, w: [f64; 3]) -> f64 {
    k[0] as f64 * w[0] + k[1] as f64 * w[1] + k[2] as f64 * w[2]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize) -> PatchConfig {
        PatchConfig { m, shell_halfwidth: 2.0, corridor: 1.2, delta: 0.1, r_cut: 1.1 }
    }

    #[test]
    fn two_patches_are_caps() {
        let s = FermiSetup::new(10.0).unwrap();
        let d = build_decomposition(&cfg(2), &s).unwrap();
        assert_eq!(d.patches.len(), 2);
        assert_eq!(d.center(0), [0.0, 0.0, 1.0]);
        assert_eq!(d.center(1), [-0.0, -0.0, -1.0]);
    }

    #[test]
    fn equal_areas_and_mirrors() {
        let s = FermiSetup::new(20.0).unwrap();
        for m in [8, 32, 100, 400] {
            let d = build_decomposition(&cfg(m), &s).unwrap();
            let total: f64 = d.patches.iter().map(|p| p.solid_angle).sum();
            assert!((total - 4.0 * PI).abs() < 1e-9);
            for p in &d.patches {
                assert!((p.solid_angle * m as f64 / (4.0 * PI) - 1.0).abs() < 1e-9);
                let q = &d.patches[d.mirror(p.index)];
                assert_eq!(q.center, [-p.center[0], -p.center[1], -p.center[2]]);
            }
        }
    }

    #[test]
    fn gamma_nor_small() {
        assert_eq!(gamma_nor(1.5).unwrap().len(), 9);
        assert!(gamma_nor(1.0).unwrap().is_empty());
    }

    #[test]
    fn corridor_too_wide_is_infeasible() {
        let s = FermiSetup::new(5.0).unwrap();
        let c = PatchConfig { m: 64, shell_halfwidth: 2.0, corridor: 4.0, delta: 0.1, r_cut: 1.1 };
        assert!(matches!(build_decomposition(&c, &s), Err(Error::Infeasible(_))));
    }

    #[test]
    fn regime_delta_zero() {
        let s = FermiSetup::new(10.0).unwrap();
        let c = PatchConfig { delta: 0.0, ..cfg(16) };
        let d = validate_regime(&c, &s);
        assert!((d.r1 - 1.1f64.powi(2) / 16.0).abs() < 1e-15);
        assert!((d.r2 - 16.0 * 1.1f64.powi(4) / s.n_f64().powf(2.0 / 3.0)).abs() < 1e-12);
    }
}
