//! Bosonic correlation energy from the per-k traces, compared with the
//! closed-form RPA integral.

use crate::bogo::{assemble_blocks, trace_correction_secular};
use crate::error::{Error, Result};
use crate::lattice::{norm, IVec3};
use crate::model::{hartree_fock_energy, rpa_closed_form, rpa_term, FermiSetup, Potential};
use crate::patches::{
    build_decomposition, gamma_nor, pair_index, validate_regime, PairCache, PairMode, PatchConfig,
    RegimeDiagnostics,
};
use crate::quad::QuadControl;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const GAP_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k_f: f64,
    pub patch: PatchConfig,
    pub potential: Potential,
    pub mode: PairMode,
    pub quad: QuadControl,
    /// Explicit momenta replacing `Γ^nor`.
    pub k_set: Option<Vec<IVec3>>,
    /// Tolerance for the tail of the untruncated closed-form k-sum.
    pub rpa_tail_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KRow {
    pub k: IVec3,
    pub norm: f64,
    pub vhat: f64,
    /// `|I_k^+|`
    pub patches: usize,
    /// `ħκ|k|·tr(E − D − W)`
    pub trace_term: f64,
    /// Closed form for the pair `±k` with κ₀: `2ħκ₀|k|·[…]`
    pub closed_term: f64,
    /// Same with κ in place of κ₀.
    pub closed_term_kappa: f64,
    pub rel_gap: f64,
    pub rel_gap_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedK {
    pub k: IVec3,
    pub reason: String,
    pub closed_term: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceResult {
    pub e_trace: f64,
    /// Closed form over the same momenta, skipped ones included.
    pub e_rpa_closed: f64,
    pub e_rpa_closed_kappa: f64,
    pub rows: Vec<KRow>,
    pub skipped: Vec<SkippedK>,
    pub dropped_patches: usize,
    pub regime: RegimeDiagnostics,
}

fn closed_pair_term(setup: &FermiSetup, kappa: f64, k: IVec3, vhat: f64, quad: &QuadControl) -> Result<f64> {
    Ok(2.0 * setup.hbar * kappa * norm(k) * rpa_term(kappa, vhat, quad)?.value)
}

/// A row or a skip record for one k, and the number of dropped patches.
type PerK = (Option<KRow>, Option<SkippedK>, usize);

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(GAP_FLOOR)
}

pub fn momenta(cfg: &RunConfig) -> Result<Vec<IVec3>> {
    let ks = match &cfg.k_set {
        Some(ks) => ks.clone(),
        None => gamma_nor(cfg.patch.r_cut)?.points,
    };
    if ks.contains(&[0, 0, 0]) {
        return Err(Error::InvalidInput("k = 0 in momentum set".into()));
    }
    Ok(ks)
}

/// `Σ_k ħκ|k|·tr(E(k) − D(k) − W(k))` over `Γ^nor` (or the explicit set), in
/// lexicographic order of k.
pub fn correlation_energy_trace(cfg: &RunConfig, cache: Option<&mut PairCache>) -> Result<TraceResult> {
    let setup = FermiSetup::new(cfg.k_f)?;
    let dec = build_decomposition(&cfg.patch, &setup)?;
    let regime = validate_regime(&cfg.patch, &setup);
    let mut ks = momenta(cfg)?;
    ks.sort_unstable();
    ks.dedup();
    let counts: Vec<Option<Vec<u64>>> = match cfg.mode {
        PairMode::Semiclassical => vec![None; ks.len()],
        PairMode::ExactLattice => {
            let labels = dec.labels();
            match cache {
                Some(c) => ks.iter().map(|&k| Some(c.counts(&labels, &dec, k))).collect(),
                None => ks.iter().map(|&k| Some(labels.pair_counts(k))).collect(),
            }
        }
    };
    let per_k: Vec<Result<PerK>> = ks
        .par_iter()
        .zip(counts.par_iter())
        .map(|(&k, c)| {
            let vhat = cfg.potential.checked(k)?;
            let closed = closed_pair_term(&setup, setup.kappa0, k, vhat, &cfg.quad)?;
            let closed_kappa = closed_pair_term(&setup, setup.kappa, k, vhat, &cfg.quad)?;
            let idx = pair_index(k, &dec, &setup, cfg.mode, c.as_deref())?;
            let dropped = idx.dropped.len();
            if idx.plus.is_empty() {
                let reason = if dropped > 0 {
                    format!("all {dropped} patches of I_k^+ have no pairs")
                } else {
                    "I_k^+ is empty".to_string()
                };
                return Ok((None, Some(SkippedK { k, reason, closed_term: closed }), dropped));
            }
            let block = assemble_blocks(k, &idx, &cfg.potential, &setup)?;
            let trace_term = setup.hbar * setup.kappa * norm(k) * trace_correction_secular(&block);
            Ok((
                Some(KRow {
                    k,
                    norm: norm(k),
                    vhat,
                    patches: idx.plus.len(),
                    trace_term,
                    closed_term: closed,
                    closed_term_kappa: closed_kappa,
                    rel_gap: rel(trace_term, closed),
                    rel_gap_kappa: rel(trace_term, closed_kappa),
                }),
                None,
                dropped,
            ))
        })
        .collect();
    let mut out = TraceResult {
        e_trace: 0.0,
        e_rpa_closed: 0.0,
        e_rpa_closed_kappa: 0.0,
        rows: Vec::new(),
        skipped: Vec::new(),
        dropped_patches: 0,
        regime,
    };
    for r in per_k {
        let (row, skip, dropped) = r?;
        out.dropped_patches += dropped;
        if let Some(row) = row {
            out.e_trace += row.trace_term;
            out.e_rpa_closed += row.closed_term;
            out.e_rpa_closed_kappa += row.closed_term_kappa;
            out.rows.push(row);
        }
        if let Some(s) = skip {
            let vhat = cfg.potential.checked(s.k)?;
            out.e_rpa_closed += s.closed_term;
            out.e_rpa_closed_kappa += closed_pair_term(&setup, setup.kappa, s.k, vhat, &cfg.quad)?;
            out.skipped.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub schema_version: u32,
    pub n: u64,
    pub hbar: f64,
    pub kappa: f64,
    pub kappa0: f64,
    pub e_hf: f64,
    /// Closed form over the momenta of the trace sum.
    pub e_rpa_closed: f64,
    pub e_rpa_closed_kappa: f64,
    pub e_corr_trace: f64,
    /// Closed form over all `0 < |k| ≤ cutoff` and its tail bound, when the
    /// cutoff is finite and the tail within tolerance.
    pub e_rpa_full: Option<f64>,
    pub e_rpa_full_tail: Option<f64>,
    pub notes: Vec<String>,
    pub per_k_rows: Vec<KRow>,
    pub skipped: Vec<SkippedK>,
    pub regime: RegimeDiagnostics,
    pub params: RunConfig,
}

pub fn hf_plus_rpa(cfg: &RunConfig, cache: Option<&mut PairCache>) -> Result<EnergyReport> {
    let setup = FermiSetup::new(cfg.k_f)?;
    let hf = hartree_fock_energy(&setup, &cfg.potential)?;
    let tr = correlation_energy_trace(cfg, cache)?;
    let mut notes: Vec<String> = tr.regime.warnings.clone();
    if tr.dropped_patches > 0 {
        notes.push(format!("{} patch/momentum pairs dropped for having no pairs", tr.dropped_patches));
    }
    let (e_rpa_full, e_rpa_full_tail) = match rpa_closed_form(&setup, &cfg.potential, &cfg.quad, cfg.rpa_tail_tol) {
        Ok(r) => (Some(r.total), Some(r.k_tail_bound)),
        Err(e @ (Error::NonConvergent { .. } | Error::InvalidInput(_))) => {
            notes.push(format!("full closed form not reported: {e}"));
            (None, None)
        }
        Err(e) => return Err(e),
    };
    Ok(EnergyReport {
        schema_version: REPORT_SCHEMA_VERSION,
        n: setup.n,
        hbar: setup.hbar,
        kappa: setup.kappa,
        kappa0: setup.kappa0,
        e_hf: hf.total,
        e_rpa_closed: tr.e_rpa_closed,
        e_rpa_closed_kappa: tr.e_rpa_closed_kappa,
        e_corr_trace: tr.e_trace,
        e_rpa_full,
        e_rpa_full_tail,
        notes,
        per_k_rows: tr.rows,
        skipped: tr.skipped,
        regime: tr.regime,
        params: cfg.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchedulePoint {
    pub k_f: f64,
    pub m: usize,
}

/// Even patch count nearest to `c·N^(1/3)`, at least 2.
pub fn patches_for(setup: &FermiSetup, c: f64) -> usize {
    let m = 2.0 * (c * setup.n_f64().cbrt() / 2.0).round();
    (m as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub k_f: f64,
    pub n: u64,
    pub m: usize,
    pub r_cut: f64,
    pub delta: f64,
    pub e_trace: f64,
    pub e_rpa_closed: f64,
    pub abs_gap: f64,
    pub rel_gap: f64,
    pub rel_gap_kappa: f64,
    pub worst_k_rel_gap: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub rows: Vec<ConvergenceRow>,
    pub strictly_decreasing: bool,
}

pub fn converge_sweep(base: &RunConfig, schedule: &[SchedulePoint], mut cache: Option<&mut PairCache>) -> Result<Sweep> {
    if schedule.len() < 2 {
        return Err(Error::InvalidInput("a sweep needs at least two schedule points".into()));
    }
    let mut rows = Vec::with_capacity(schedule.len());
    for pt in schedule {
        let cfg = RunConfig { k_f: pt.k_f, patch: PatchConfig { m: pt.m, ..base.patch }, ..base.clone() };
        let tr = correlation_energy_trace(&cfg, cache.as_deref_mut())?;
        let setup = FermiSetup::new(pt.k_f)?;
        rows.push(ConvergenceRow {
            k_f: pt.k_f,
            n: setup.n,
            m: pt.m,
            r_cut: cfg.patch.r_cut,
            delta: cfg.patch.delta,
            e_trace: tr.e_trace,
            e_rpa_closed: tr.e_rpa_closed,
            abs_gap: (tr.e_trace - tr.e_rpa_closed).abs(),
            rel_gap: rel(tr.e_trace, tr.e_rpa_closed),
            rel_gap_kappa: rel(tr.e_trace, tr.e_rpa_closed_kappa),
            worst_k_rel_gap: tr.rows.iter().map(|r| r.rel_gap).fold(0.0, f64::max),
            skipped: tr.skipped.len(),
        });
    }
    let strictly_decreasing = rows.windows(2).all(|w| w[1].rel_gap < w[0].rel_gap);
    Ok(Sweep { rows, strictly_decreasing })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelShape {
    pub k: IVec3,
    pub m: usize,
    pub patches: usize,
    pub vhat: f64,
    /// `max_{α,β}|K_αβ|·M/V̂(k)`
    pub k_max_scaled: f64,
    /// `‖L‖_HS/V̂(k)`
    pub l_hs_scaled: f64,
}

/// Size of the kernels `K(k)` and `L(k)` relative to their expected scaling.
pub fn kernel_shape(cfg: &RunConfig, k: IVec3) -> Result<KernelShape> {
    let setup = FermiSetup::new(cfg.k_f)?;
    let dec = build_decomposition(&cfg.patch, &setup)?;
    let counts = match cfg.mode {
        PairMode::Semiclassical => None,
        PairMode::ExactLattice => Some(dec.labels().pair_counts(k)),
    };
    let idx = pair_index(k, &dec, &setup, cfg.mode, counts.as_deref())?;
    let block = assemble_blocks(k, &idx, &cfg.potential, &setup)?;
    let qd = crate::bogo::analyze(&block)?;
    let vhat = cfg.potential.checked(k)?;
    if vhat == 0.0 {
        return Err(Error::InvalidInput("kernel shape needs V̂(k) != 0".into()));
    }
    Ok(KernelShape {
        k,
        m: cfg.patch.m,
        patches: idx.plus.len(),
        vhat,
        k_max_scaled: qd.k.amax() * cfg.patch.m as f64 / vhat,
        l_hs_scaled: qd.l.norm() / vhat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountAsymptotics {
    pub k_f: f64,
    pub m: usize,
    pub ks: Vec<IVec3>,
    /// `max_α |n_α²·M/(4πk_F²|k·ω̂_α|) − 1|` over `I_k^+`, patches without
    /// pairs included.
    pub max_deviation: f64,
    pub worst: Option<(IVec3, usize)>,
}

pub fn count_asymptotics(k_f: f64, patch: &PatchConfig, ks: &[IVec3], cache: Option<&mut PairCache>) -> Result<CountAsymptotics> {
    let setup = FermiSetup::new(k_f)?;
    let dec = build_decomposition(patch, &setup)?;
    let labels = dec.labels();
    let mut cache = cache;
    let mut out = CountAsymptotics { k_f, m: patch.m, ks: ks.to_vec(), max_deviation: 0.0, worst: None };
    for &k in ks {
        let counts = match cache.as_deref_mut() {
            Some(c) => c.counts(&labels, &dec, k),
            None => labels.pair_counts(k),
        };
        let idx = pair_index(k, &dec, &setup, PairMode::ExactLattice, Some(&counts))?;
        let devs = idx
            .plus
            .iter()
            .map(|e| (e.alpha, (e.n_sq / e.n_asym_sq - 1.0).abs()))
            .chain(idx.dropped.iter().map(|&a| (a, 1.0)));
        for (a, d) in devs {
            if d > out.max_deviation || out.worst.is_none() {
                out.max_deviation = out.max_deviation.max(d);
                out.worst = Some((k, a));
            }
        }
    }
    Ok(out)
}
