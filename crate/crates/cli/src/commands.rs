//! The subcommands. Each writes its reports into the output directory and
//! returns the verdicts it asserts.

use crate::config::{Config, ConfigError, GapMetric, VerifyCheck};
use crate::output::{fmt_f64, OutputDir};
use bosonize::bogo::{analyze, random_block, trace_correction, trace_p_secular, verify_decomposition, BlockData};
use bosonize::energy::{converge_sweep, count_asymptotics, hf_plus_rpa, kernel_shape, momenta, CountAsymptotics, KernelShape, RunConfig};
use bosonize::lattice::{ellipse_annulus_count, fit_error_exponent, CountReport, IVec3};
use bosonize::model::{g_integral, kappa0, rpa_closed_form, rpa_small_coupling_ratio, FermiSetup, Family, Potential};
use bosonize::patches::{build_decomposition, pair_count, pair_index, validate_regime, PairCache, PairMode, RegimeDiagnostics};
use bosonize::fockoracle::run_oracle_suite;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CmdError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] bosonize::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type CmdResult = Result<Vec<Verdict>, CmdError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Ball,
    Patches,
    Rpa,
    Converge,
    Count,
    Verify,
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Ball => "ball",
            Command::Patches => "patches",
            Command::Rpa => "rpa",
            Command::Converge => "converge",
            Command::Count => "count",
            Command::Verify => "verify",
            Command::Oracle => "oracle",
        }
    }

    pub fn uses_cache(self) -> bool {
        matches!(self, Command::Patches | Command::Rpa | Command::Converge | Command::Count)
    }
}

/// One asserted check: `pass` is `value ≤ bound` unless stated otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub id: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Verdict {
    pub fn at_most(id: impl Into<String>, value: f64, bound: f64) -> Self {
        Self { id: id.into(), value, bound, pass: value <= bound }
    }

    pub fn flag(id: impl Into<String>, ok: bool) -> Self {
        Self { id: id.into(), value: if ok { 1.0 } else { 0.0 }, bound: 1.0, pass: ok }
    }
}

pub fn all_pass(verdicts: &[Verdict]) -> bool {
    verdicts.iter().all(|v| v.pass)
}

pub fn failing(verdicts: &[Verdict]) -> Vec<String> {
    verdicts.iter().filter(|v| !v.pass).map(|v| v.id.clone()).collect()
}

/// The pair-count cache of one run.
pub struct CacheHandle {
    pub path: Option<PathBuf>,
    pub cache: PairCache,
}

impl CacheHandle {
    pub fn disabled() -> Self {
        Self { path: None, cache: PairCache::default() }
    }

    pub fn open(path: PathBuf) -> Result<Self, CmdError> {
        let cache = PairCache::load(&path)?;
        Ok(Self { path: Some(path), cache })
    }

    fn get(&mut self) -> Option<&mut PairCache> {
        self.path.as_ref().map(|_| &mut self.cache)
    }

    pub fn save(&self) -> Result<(), CmdError> {
        if let Some(p) = &self.path {
            self.cache.save(p)?;
        }
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &Config, out: &mut OutputDir, cache: &mut CacheHandle) -> CmdResult {
    match cmd {
        Command::Ball => cmd_ball(cfg, out),
        Command::Patches => cmd_patches(cfg, out, cache),
        Command::Rpa => cmd_rpa(cfg, out, cache),
        Command::Converge => cmd_converge(cfg, out, cache),
        Command::Count => cmd_count(cfg, out, cache),
        Command::Verify => cmd_verify(cfg, out),
        Command::Oracle => cmd_oracle(out),
    }
}

fn ivec(k: IVec3) -> [String; 3] {
    k.map(|x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallRow {
    pub k_f: f64,
    pub n: u64,
    pub hbar: f64,
    pub kappa: f64,
    pub kappa_minus_kappa0: f64,
}

pub fn ball_rows(cfg: &Config) -> Result<Vec<BallRow>, CmdError> {
    let radii = if cfg.ball.k_f.is_empty() { vec![cfg.physics.k_f] } else { cfg.ball.k_f.clone() };
    radii
        .into_iter()
        .map(|k_f| {
            let s = FermiSetup::new(k_f)
                .map_err(|e| ConfigError::Invalid { field: "ball.k_f".into(), message: e.to_string() })?;
            Ok(BallRow { k_f, n: s.n, hbar: s.hbar, kappa: s.kappa, kappa_minus_kappa0: s.kappa - kappa0() })
        })
        .collect()
}

fn cmd_ball(cfg: &Config, out: &mut OutputDir) -> CmdResult {
    let rows = ball_rows(cfg)?;
    let header = ["k_f", "n", "hbar", "kappa", "kappa_minus_kappa0"];
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt_f64(r.k_f), r.n.to_string(), fmt_f64(r.hbar), fmt_f64(r.kappa), fmt_f64(r.kappa_minus_kappa0)])
        .collect();
    println!("{}", header.join("\t"));
    for r in &table {
        println!("{}", r.join("\t"));
    }
    out.json("ball.json", &rows)?;
    out.csv("ball.csv", &header, &table)?;
    Ok(Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchRow {
    pub k: IVec3,
    pub alpha: usize,
    /// `+1` for `I_k^+`, `−1` for `I_k^−`
    pub side: i8,
    pub k_dot_omega: f64,
    pub n_sq: u64,
    pub n_sq_asymptotic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchesReport {
    pub k_f: f64,
    pub n: u64,
    pub m: usize,
    pub max_angular_diameter: f64,
    pub half_corridor_angle: f64,
    pub centers: Vec<[f64; 3]>,
    pub regime: RegimeDiagnostics,
    pub momenta: Vec<IVec3>,
    pub dropped: Vec<(IVec3, usize)>,
    pub rows: Vec<PatchRow>,
}

fn cmd_patches(cfg: &Config, out: &mut OutputDir, cache: &mut CacheHandle) -> CmdResult {
    let rc = cfg.run_config()?;
    let setup = FermiSetup::new(rc.k_f)?;
    let dec = build_decomposition(&rc.patch, &setup)?;
    let labels = dec.labels();
    let ks = momenta(&rc)?;
    let mut rows = Vec::new();
    let mut dropped = Vec::new();
    let mut mirror_ok = true;
    for &k in &ks {
        let counts = match cache.get() {
            Some(c) => c.counts(&labels, &dec, k),
            None => labels.pair_counts(k),
        };
        let idx = pair_index(k, &dec, &setup, PairMode::ExactLattice, Some(&counts))?;
        dropped.extend(idx.dropped.iter().map(|&a| (k, a)));
        for e in &idx.plus {
            let minus = pair_count(k, e.mirror, &labels, &dec);
            mirror_ok &= minus as f64 == e.n_sq;
            rows.push(PatchRow { k, alpha: e.alpha, side: 1, k_dot_omega: e.k_dot_omega, n_sq: e.n_sq as u64, n_sq_asymptotic: e.n_asym_sq });
            rows.push(PatchRow { k, alpha: e.mirror, side: -1, k_dot_omega: -e.k_dot_omega, n_sq: minus, n_sq_asymptotic: e.n_asym_sq });
        }
    }
    let report = PatchesReport {
        k_f: rc.k_f,
        n: setup.n,
        m: dec.m(),
        max_angular_diameter: dec.max_angular_diameter(),
        half_corridor_angle: dec.half_angle,
        centers: (0..dec.m()).map(|a| dec.center(a)).collect(),
        regime: validate_regime(&rc.patch, &setup),
        momenta: ks,
        dropped,
        rows,
    };
    let table: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            let [a, b, c] = ivec(r.k);
            vec![a, b, c, r.alpha.to_string(), r.side.to_string(), fmt_f64(r.k_dot_omega), r.n_sq.to_string(), fmt_f64(r.n_sq_asymptotic), fmt_f64(r.n_sq as f64 / r.n_sq_asymptotic)]
        })
        .collect();
    out.json("patches.json", &report)?;
    out.csv("patches.csv", &["k1", "k2", "k3", "alpha", "side", "k_dot_omega", "n_sq", "n_sq_asymptotic", "ratio"], &table)?;
    println!(
        "k_F = {}  N = {}  M = {}  momenta = {}  patch rows = {}  dropped = {}",
        fmt_f64(report.k_f),
        report.n,
        report.m,
        report.momenta.len(),
        report.rows.len(),
        report.dropped.len()
    );
    for w in &report.regime.warnings {
        println!("regime warning: {w}");
    }
    Ok(vec![Verdict::flag("patches/mirror-counts", mirror_ok)])
}

fn cmd_rpa(cfg: &Config, out: &mut OutputDir, cache: &mut CacheHandle) -> CmdResult {
    let rc = cfg.run_config()?;
    let rep = hf_plus_rpa(&rc, cache.get())?;
    let table: Vec<Vec<String>> = rep
        .per_k_rows
        .iter()
        .map(|r| {
            let [a, b, c] = ivec(r.k);
            vec![a, b, c, fmt_f64(r.norm), fmt_f64(r.vhat), r.patches.to_string(), fmt_f64(r.trace_term), fmt_f64(r.closed_term), fmt_f64(r.closed_term_kappa), fmt_f64(r.rel_gap), fmt_f64(r.rel_gap_kappa)]
        })
        .collect();
    out.json("rpa.json", &rep)?;
    out.csv(
        "rpa_per_k.csv",
        &["k1", "k2", "k3", "norm", "vhat", "patches", "trace_term", "closed_term", "closed_term_kappa", "rel_gap", "rel_gap_kappa"],
        &table,
    )?;
    println!("N = {}  hbar = {}  kappa = {}", rep.n, fmt_f64(rep.hbar), fmt_f64(rep.kappa));
    println!("E_HF         = {}", fmt_f64(rep.e_hf));
    println!("E_corr trace = {}", fmt_f64(rep.e_corr_trace));
    println!("E_RPA closed = {}", fmt_f64(rep.e_rpa_closed));
    if let Some(f) = rep.e_rpa_full {
        println!("E_RPA full   = {}", fmt_f64(f));
    }
    for n in &rep.notes {
        println!("note: {n}");
    }
    let row_sum: f64 = rep.per_k_rows.iter().map(|r| r.trace_term).sum();
    let scale = rep.e_corr_trace.abs().max(f64::MIN_POSITIVE);
    Ok(vec![Verdict::at_most("rpa/row-sum", (row_sum - rep.e_corr_trace).abs() / scale, 1e-12)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeReport {
    pub metric: GapMetric,
    pub base: RunConfig,
    pub sweep: bosonize::energy::Sweep,
    pub metric_values: Vec<f64>,
    pub strictly_decreasing: bool,
}

fn cmd_converge(cfg: &Config, out: &mut OutputDir, cache: &mut CacheHandle) -> CmdResult {
    let schedule = cfg.schedule()?;
    let base = cfg.run_config()?;
    let sweep = converge_sweep(&base, &schedule, cache.get())?;
    let metric = cfg.converge.metric;
    let metric_values: Vec<f64> = sweep
        .rows
        .iter()
        .map(|r| match metric {
            GapMetric::RelGap => r.rel_gap,
            GapMetric::RelGapKappa => r.rel_gap_kappa,
        })
        .collect();
    let strictly_decreasing = metric_values.windows(2).all(|w| w[1] < w[0]);
    let table: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .map(|r| {
            vec![fmt_f64(r.k_f), r.n.to_string(), r.m.to_string(), fmt_f64(r.e_trace), fmt_f64(r.e_rpa_closed), fmt_f64(r.abs_gap), fmt_f64(r.rel_gap), fmt_f64(r.rel_gap_kappa), fmt_f64(r.worst_k_rel_gap), r.skipped.to_string()]
        })
        .collect();
    let header = ["k_f", "n", "m", "e_trace", "e_rpa_closed", "abs_gap", "rel_gap", "rel_gap_kappa", "worst_k_rel_gap", "skipped"];
    println!("{}", header.join("\t"));
    for r in &table {
        println!("{}", r.join("\t"));
    }
    let mut verdicts = vec![Verdict::flag("converge/strictly-decreasing", strictly_decreasing)];
    if let Some(bound) = cfg.converge.final_max {
        verdicts.push(Verdict::at_most("converge/final-gap", *metric_values.last().expect("two points"), bound));
    }
    let report = ConvergeReport { metric, base, sweep, metric_values, strictly_decreasing };
    out.json("converge.json", &report)?;
    out.csv("converge.csv", &header, &table)?;
    Ok(verdicts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleCount {
    pub radius: f64,
    pub report: CountReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountCommandReport {
    pub circle: Vec<CircleCount>,
    pub circle_exponent: Option<f64>,
    pub asymptotics: Vec<CountAsymptotics>,
}

fn cmd_count(cfg: &Config, out: &mut OutputDir, cache: &mut CacheHandle) -> CmdResult {
    let c = &cfg.count;
    if c.radii.is_empty() && c.points.is_empty() {
        return Err(ConfigError::Invalid { field: "count".into(), message: "nothing to count: radii and points are both empty".into() }.into());
    }
    let mut verdicts = Vec::new();
    let mut circle = Vec::new();
    for &r in &c.radii {
        circle.push(CircleCount { radius: r, report: ellipse_annulus_count(1.0, 0.0, r * r, [0.0, 0.0])? });
    }
    let circle_exponent = if c.radii.is_empty() {
        None
    } else {
        let data: Vec<(f64, CountReport)> = circle.iter().map(|x| (x.radius, x.report.clone())).collect();
        let e = fit_error_exponent(&data)?;
        verdicts.push(Verdict::at_most("count/circle-exponent", e, c.exponent_max));
        Some(e)
    };
    let patch = cfg.patches.patch_config()?;
    let mut asymptotics = Vec::new();
    for p in &c.points {
        if c.ks.is_empty() {
            return Err(ConfigError::Invalid { field: "count.ks".into(), message: "must not be empty".into() }.into());
        }
        let pc = bosonize::patches::PatchConfig { m: p.m, ..patch };
        pc.validate().map_err(|e| ConfigError::Invalid { field: "count.points".into(), message: e.to_string() })?;
        asymptotics.push(count_asymptotics(p.k_f, &pc, &c.ks, cache.get())?);
    }
    if asymptotics.len() >= 2 {
        let dec = asymptotics.windows(2).all(|w| w[1].max_deviation < w[0].max_deviation);
        verdicts.push(Verdict::flag("count/asymptotics-decreasing", dec));
    }
    let circle_rows: Vec<Vec<String>> = circle
        .iter()
        .map(|x| vec![fmt_f64(x.radius), x.report.exact.to_string(), fmt_f64(x.report.predicted), fmt_f64(x.report.error)])
        .collect();
    let asym_rows: Vec<Vec<String>> = asymptotics
        .iter()
        .map(|a| {
            let (wk, wa) = a.worst.map(|(k, a)| (format!("{} {} {}", k[0], k[1], k[2]), a.to_string())).unwrap_or_default();
            vec![fmt_f64(a.k_f), a.m.to_string(), fmt_f64(a.max_deviation), wk, wa]
        })
        .collect();
    for r in &circle_rows {
        println!("circle R = {}  exact = {}  predicted = {}  error = {}", r[0], r[1], r[2], r[3]);
    }
    if let Some(e) = circle_exponent {
        println!("circle error exponent = {}", fmt_f64(e));
    }
    for r in &asym_rows {
        println!("k_F = {}  M = {}  max deviation = {}", r[0], r[1], r[2]);
    }
    let report = CountCommandReport { circle, circle_exponent, asymptotics };
    out.json("count.json", &report)?;
    out.csv("count_circle.csv", &["radius", "exact", "predicted", "error"], &circle_rows)?;
    out.csv("count_asymptotics.csv", &["k_f", "m", "max_deviation", "worst_k", "worst_alpha"], &asym_rows)?;
    Ok(verdicts)
}

/// Per-instance results of the matrix-identity suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub index: usize,
    pub dim: usize,
    pub g: f64,
    pub v_norm: f64,
    pub error: Option<String>,
    pub reconstruction: f64,
    pub factorization: f64,
    pub min_eig_p_minus_d: f64,
    pub trace_correction: f64,
    pub trace_p_dense: f64,
    pub trace_p_secular: f64,
    pub trace_p_rel_diff: f64,
}

pub fn instance_row(index: usize, block: &BlockData) -> InstanceRow {
    let mut row = InstanceRow {
        index,
        dim: block.i(),
        g: block.g,
        v_norm: block.v.norm(),
        error: None,
        reconstruction: f64::NAN,
        factorization: f64::NAN,
        min_eig_p_minus_d: f64::NAN,
        trace_correction: f64::NAN,
        trace_p_dense: f64::NAN,
        trace_p_secular: trace_p_secular(block),
        trace_p_rel_diff: f64::NAN,
    };
    match analyze(block) {
        Ok(qd) => {
            row.reconstruction = verify_decomposition(&qd);
            row.factorization = qd.diagnostics.e_factor_residual;
            row.min_eig_p_minus_d = qd.diagnostics.min_eig_p_minus_d;
            row.trace_correction = trace_correction(&qd);
            row.trace_p_dense = qd.p.trace();
            row.trace_p_rel_diff = (row.trace_p_dense - row.trace_p_secular).abs() / row.trace_p_secular.abs().max(f64::MIN_POSITIVE);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

pub fn random_instances(seed: u64, count: usize, i_max: usize) -> Vec<BlockData> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_block(&mut rng, i_max)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: Family,
    pub cutoff: f64,
    pub e_rpa: f64,
    pub ratio_eps: [f64; 2],
    pub ratio_rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub k_f: f64,
    pub zero_potential: f64,
    pub g_integral: f64,
    pub g_integral_error: f64,
    pub families: Vec<FamilyCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub instances: Vec<InstanceRow>,
    pub kernel: Vec<KernelShape>,
    pub closed_form: Option<ClosedFormReport>,
}

fn max_of(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::NEG_INFINITY, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) })
}

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn cmd_verify(cfg: &Config, out: &mut OutputDir) -> CmdResult {
    let v = &cfg.verify;
    if v.checks.is_empty() {
        return Err(ConfigError::Invalid { field: "verify.checks".into(), message: "no checks enabled".into() }.into());
    }
    let on = |c: VerifyCheck| v.checks.contains(&c);
    let mut verdicts = Vec::new();
    let mut report = VerifyReport { seed: v.seed, instances: Vec::new(), kernel: Vec::new(), closed_form: None };

    if on(VerifyCheck::Matrix) || on(VerifyCheck::DualTrace) {
        if v.instances == 0 || v.i_max == 0 {
            return Err(ConfigError::Invalid { field: "verify.instances".into(), message: "instances and i_max must be positive".into() }.into());
        }
        let blocks = random_instances(v.seed, v.instances, v.i_max);
        report.instances = blocks.par_iter().enumerate().map(|(i, b)| instance_row(i, b)).collect();
        let rows = &report.instances;
        let failed = rows.iter().filter(|r| r.error.is_some()).count();
        verdicts.push(Verdict::at_most("matrix/analysis-errors", failed as f64, 0.0));
        if on(VerifyCheck::Matrix) {
            verdicts.push(Verdict::at_most("matrix/reconstruction", max_of(rows.iter().map(|r| r.reconstruction)), v.reconstruction_tol));
            verdicts.push(Verdict::at_most("matrix/factorization", max_of(rows.iter().map(|r| r.factorization)), v.factor_tol));
            verdicts.push(Verdict::at_most("matrix/p-minus-d", max_of(rows.iter().map(|r| -r.min_eig_p_minus_d)), v.psd_tol));
            verdicts.push(Verdict::at_most("matrix/trace-sign", max_of(rows.iter().map(|r| r.trace_correction)), v.trace_tol));
        }
        if on(VerifyCheck::DualTrace) {
            verdicts.push(Verdict::at_most("dual-trace", max_of(rows.iter().map(|r| r.trace_p_rel_diff)), v.dual_tol));
        }
        println!("{} random instances (seed {}), {} analysis errors", rows.len(), v.seed, failed);
    }

    if on(VerifyCheck::Kernel) {
        if v.kernel_m.len() < 2 {
            return Err(ConfigError::Invalid { field: "verify.kernel_m".into(), message: "need at least two patch counts".into() }.into());
        }
        let base = cfg.run_config()?;
        for &m in &v.kernel_m {
            let rc = RunConfig { patch: bosonize::patches::PatchConfig { m, ..base.patch }, ..base.clone() };
            report.kernel.push(kernel_shape(&rc, v.kernel_k)?);
        }
        let ks: Vec<f64> = report.kernel.iter().map(|s| s.k_max_scaled).collect();
        let ls: Vec<f64> = report.kernel.iter().map(|s| s.l_hs_scaled).collect();
        verdicts.push(Verdict::at_most("kernel/k-spread", spread(&ks), v.kernel_spread));
        verdicts.push(Verdict::at_most("kernel/l-spread", spread(&ls), v.kernel_spread));
        for s in &report.kernel {
            println!("M = {}  |I| = {}  max|K|*M/V = {}  |L|_HS/V = {}", s.m, s.patches, fmt_f64(s.k_max_scaled), fmt_f64(s.l_hs_scaled));
        }
    }

    if on(VerifyCheck::ClosedForm) {
        let setup = FermiSetup::new(cfg.physics.k_f)
            .map_err(|e| ConfigError::Invalid { field: "physics.k_f".into(), message: e.to_string() })?;
        let quad = cfg.quad.control();
        let cutoff = cfg.potential.cutoff;
        let zero = rpa_closed_form(&setup, &Potential::new(Family::Zero, cutoff)?, &quad, f64::INFINITY)?.total;
        verdicts.push(Verdict::flag("closed-form/zero-potential", zero == 0.0));
        let gi = g_integral(&quad)?;
        verdicts.push(Verdict::at_most("closed-form/g-integral", (gi.value - FRAC_PI_4).abs(), v.g_integral_tol));
        let mut families = Vec::new();
        for (i, f) in v.families.iter().enumerate() {
            let pot = f.potential(&format!("verify.families[{i}]"))?;
            if pot.is_zero() {
                continue;
            }
            let e = rpa_closed_form(&setup, &pot, &quad, f64::INFINITY)?.total;
            let r0 = rpa_small_coupling_ratio(&setup, &pot, v.eps[0], &quad)?;
            let r1 = rpa_small_coupling_ratio(&setup, &pot, v.eps[1], &quad)?;
            let rel = (r0 - r1).abs() / r1.abs().max(f64::MIN_POSITIVE);
            let name = format!("{}#{i}", f.family);
            verdicts.push(Verdict::flag(format!("closed-form/negative/{name}"), e < 0.0));
            verdicts.push(Verdict::at_most(format!("closed-form/small-coupling/{name}"), rel, v.ratio_tol));
            println!("{name}: E_RPA = {}  ratio drift = {}", fmt_f64(e), fmt_f64(rel));
            families.push(FamilyCheck { family: pot.family, cutoff: pot.cutoff, e_rpa: e, ratio_eps: [r0, r1], ratio_rel_diff: rel });
        }
        report.closed_form = Some(ClosedFormReport {
            k_f: cfg.physics.k_f,
            zero_potential: zero,
            g_integral: gi.value,
            g_integral_error: gi.error,
            families,
        });
    }

    out.json("verify.json", &report)?;
    if !report.instances.is_empty() {
        let rows: Vec<Vec<String>> = report
            .instances
            .iter()
            .map(|r| {
                vec![r.index.to_string(), r.dim.to_string(), fmt_f64(r.g), fmt_f64(r.v_norm), fmt_f64(r.reconstruction), fmt_f64(r.factorization), fmt_f64(r.min_eig_p_minus_d), fmt_f64(r.trace_correction), fmt_f64(r.trace_p_dense), fmt_f64(r.trace_p_secular), fmt_f64(r.trace_p_rel_diff), r.error.clone().unwrap_or_default()]
            })
            .collect();
        out.csv(
            "verify_instances.csv",
            &["index", "dim", "g", "v_norm", "reconstruction", "factorization", "min_eig_p_minus_d", "trace_correction", "trace_p_dense", "trace_p_secular", "trace_p_rel_diff", "error"],
            &rows,
        )?;
    }
    Ok(verdicts)
}

fn cmd_oracle(out: &mut OutputDir) -> CmdResult {
    let suite = run_oracle_suite()?;
    let verdicts: Vec<Verdict> = suite
        .verdicts
        .iter()
        .map(|v| Verdict { id: format!("oracle/{}", v.check), value: v.value, bound: v.tolerance, pass: v.pass })
        .collect();
    let rows: Vec<Vec<String>> = verdicts
        .iter()
        .map(|v| vec![v.id.clone(), fmt_f64(v.value), fmt_f64(v.bound), v.pass.to_string()])
        .collect();
    for r in &rows {
        println!("{}\t{}\t{}\t{}", r[0], r[1], r[2], r[3]);
    }
    out.json("oracle.json", &suite)?;
    out.csv("oracle.csv", &["check", "value", "bound", "pass"], &rows)?;
    Ok(verdicts)
}
