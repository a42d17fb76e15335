//! Run configuration: a TOML file with one section per module, plus
//! `--set section.key=value` overrides applied on top.

use bosonize::energy::{patches_for, RunConfig, SchedulePoint};
use bosonize::lattice::IVec3;
use bosonize::model::{FermiSetup, Family, Potential};
use bosonize::patches::{PairMode, PatchConfig};
use bosonize::quad::QuadControl;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config ({origin}): {message}")]
    Parse { origin: String, message: String },
    #[error("invalid override `{0}`: expected section.key=value")]
    BadOverride(String),
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub physics: PhysicsSection,
    pub potential: PotentialSection,
    pub patches: PatchSection,
    pub quad: QuadSection,
    pub rpa: RpaSection,
    pub ball: BallSection,
    pub converge: ConvergeSection,
    pub count: CountSection,
    pub verify: VerifySection,
    pub cache: CacheSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsSection {
    pub k_f: f64,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        Self { k_f: 8.0 }
    }
}

/// Potential family and its parameters. Only the parameters of the chosen
/// family are read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSection {
    /// `zero`, `compact-support`, `exponential` or `power-law`
    pub family: String,
    pub c: f64,
    pub k0: f64,
    pub a: f64,
    pub s: f64,
    pub cutoff: f64,
}

impl Default for PotentialSection {
    fn default() -> Self {
        Self { family: "exponential".into(), c: 1.0, k0: 1.0, a: 1.0, s: 4.0, cutoff: 40.0 }
    }
}

impl PotentialSection {
    pub fn family(&self, field: &str) -> Result<Family, ConfigError> {
        Ok(match self.family.as_str() {
            "zero" => Family::Zero,
            "compact-support" => Family::CompactSupport { c: self.c, k0: self.k0 },
            "exponential" => Family::Exponential { c: self.c, a: self.a },
            "power-law" => Family::PowerLaw { c: self.c, s: self.s },
            other => {
                return Err(invalid(
                    &format!("{field}.family"),
                    format!("unknown family `{other}` (zero, compact-support, exponential, power-law)"),
                ))
            }
        })
    }

    pub fn potential(&self, field: &str) -> Result<Potential, ConfigError> {
        Potential::new(self.family(field)?, self.cutoff).map_err(|e| invalid(field, e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PatchSection {
    pub m: usize,
    pub shell_halfwidth: f64,
    pub corridor: f64,
    pub delta: f64,
    pub r_cut: f64,
    pub mode: PairMode,
    /// Explicit momenta replacing the half ball `|k| < r_cut`.
    pub k_set: Option<Vec<IVec3>>,
}

impl Default for PatchSection {
    fn default() -> Self {
        Self {
            m: 12,
            shell_halfwidth: 2.0,
            corridor: 1.6,
            delta: 0.4,
            r_cut: 1.5,
            mode: PairMode::ExactLattice,
            k_set: None,
        }
    }
}

impl PatchSection {
    pub fn patch_config(&self) -> Result<PatchConfig, ConfigError> {
        let p = PatchConfig {
            m: self.m,
            shell_halfwidth: self.shell_halfwidth,
            corridor: self.corridor,
            delta: self.delta,
            r_cut: self.r_cut,
        };
        p.validate().map_err(|e| invalid("patches", e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadSection {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
    pub lambda_max: f64,
}

impl Default for QuadSection {
    fn default() -> Self {
        let q = QuadControl::default();
        Self { abs_tol: q.abs_tol, rel_tol: q.rel_tol, max_intervals: q.max_intervals, lambda_max: q.lambda_max }
    }
}

impl QuadSection {
    pub fn control(&self) -> QuadControl {
        QuadControl {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: self.max_intervals,
            lambda_max: self.lambda_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RpaSection {
    pub tail_tol: f64,
}

impl Default for RpaSection {
    fn default() -> Self {
        Self { tail_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallSection {
    /// Radii to tabulate; empty means `physics.k_f`.
    pub k_f: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapMetric {
    /// Gap to the closed form with κ₀.
    RelGap,
    /// Gap to the closed form with κ = k_F·ħ.
    RelGapKappa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSection {
    pub k_f: Vec<f64>,
    /// Patch counts per point; empty means `m_coeff·N^(1/3)`.
    pub m: Vec<usize>,
    pub m_coeff: f64,
    pub metric: GapMetric,
    /// Upper bound asserted on the metric at the last point.
    pub final_max: Option<f64>,
}

impl Default for ConvergeSection {
    fn default() -> Self {
        Self { k_f: vec![8.0, 12.0, 16.0, 20.0], m: Vec::new(), m_coeff: 1.0, metric: GapMetric::RelGap, final_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountSection {
    /// Disk radii for the circle error-exponent fit.
    pub radii: Vec<f64>,
    pub exponent_max: f64,
    /// Momenta for the pair-count asymptotics.
    pub ks: Vec<IVec3>,
    /// `(k_F, M)` points; the deviation must decrease along them.
    pub points: Vec<SchedulePoint>,
}

impl Default for CountSection {
    fn default() -> Self {
        Self {
            radii: vec![32.0, 64.0, 128.0, 256.0, 512.0],
            exponent_max: 1.0,
            ks: vec![[1, 0, 0], [0, 1, 0], [0, 0, 1]],
            points: vec![SchedulePoint { k_f: 15.0, m: 64 }, SchedulePoint { k_f: 30.0, m: 128 }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyCheck {
    /// Block reconstruction, factorization, `P ≥ d` and trace sign on
    /// random instances.
    Matrix,
    /// Dense against secular `tr P` on the same instances.
    DualTrace,
    /// Kernel sizes across patch counts.
    Kernel,
    /// Properties of the closed-form RPA energy.
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub checks: Vec<VerifyCheck>,
    pub instances: usize,
    pub i_max: usize,
    pub seed: u64,
    pub reconstruction_tol: f64,
    pub factor_tol: f64,
    pub psd_tol: f64,
    pub trace_tol: f64,
    pub dual_tol: f64,
    pub kernel_m: Vec<usize>,
    pub kernel_k: IVec3,
    /// Largest allowed max/min ratio of a scaled kernel size.
    pub kernel_spread: f64,
    pub families: Vec<PotentialSection>,
    pub eps: [f64; 2],
    pub ratio_tol: f64,
    pub g_integral_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            checks: vec![VerifyCheck::Matrix, VerifyCheck::DualTrace, VerifyCheck::ClosedForm],
            instances: 200,
            i_max: 64,
            seed: 1,
            reconstruction_tol: 1e-9,
            factor_tol: 1e-9,
            psd_tol: 1e-10,
            trace_tol: 1e-12,
            dual_tol: 1e-9,
            kernel_m: vec![8, 32, 128],
            kernel_k: [0, 0, 1],
            kernel_spread: 3.0,
            families: vec![
                PotentialSection { family: "compact-support".into(), c: 1.0, k0: 3.0, cutoff: 3.0, ..Default::default() },
                PotentialSection { family: "exponential".into(), c: 1.0, a: 1.0, cutoff: 40.0, ..Default::default() },
                PotentialSection { family: "power-law".into(), c: 1.0, s: 4.0, cutoff: 40.0, ..Default::default() },
            ],
            eps: [1e-2, 5e-3],
            ratio_tol: 0.05,
            g_integral_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub enabled: bool,
    /// Cache file; defaults to `pair-cache.json` in the output directory.
    pub file: Option<PathBuf>,
}

impl Default for CacheSection {
    fn default() -> Self {
        Self { enabled: true, file: None }
    }
}

impl Config {
    pub fn potential(&self) -> Result<Potential, ConfigError> {
        self.potential.potential("potential")
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        FermiSetup::new(self.physics.k_f).map_err(|e| invalid("physics.k_f", e.to_string()))?;
        if let Some(ks) = &self.patches.k_set {
            if ks.is_empty() {
                return Err(invalid("patches.k_set", "must not be empty"));
            }
            if ks.contains(&[0, 0, 0]) {
                return Err(invalid("patches.k_set", "k = 0 is not allowed"));
            }
        }
        Ok(RunConfig {
            k_f: self.physics.k_f,
            patch: self.patches.patch_config()?,
            potential: self.potential()?,
            mode: self.patches.mode,
            quad: self.quad.control(),
            k_set: self.patches.k_set.clone(),
            rpa_tail_tol: self.rpa.tail_tol,
        })
    }

    pub fn schedule(&self) -> Result<Vec<SchedulePoint>, ConfigError> {
        let c = &self.converge;
        if c.k_f.is_empty() {
            return Err(invalid("converge.k_f", "schedule is empty"));
        }
        if c.k_f.len() < 2 {
            return Err(invalid("converge.k_f", "a sweep needs at least two points"));
        }
        if !c.m.is_empty() && c.m.len() != c.k_f.len() {
            return Err(invalid(
                "converge.m",
                format!("{} patch counts for {} radii", c.m.len(), c.k_f.len()),
            ));
        }
        c.k_f
            .iter()
            .enumerate()
            .map(|(i, &k_f)| {
                let setup = FermiSetup::new(k_f).map_err(|e| invalid("converge.k_f", e.to_string()))?;
                let m = if c.m.is_empty() {
                    if !(c.m_coeff > 0.0) {
                        return Err(invalid("converge.m_coeff", "must be positive"));
                    }
                    patches_for(&setup, c.m_coeff)
                } else {
                    c.m[i]
                };
                Ok(SchedulePoint { k_f, m })
            })
            .collect()
    }
}

/// Reads `path` (or the defaults when `None`) and applies the overrides.
/// Errors in the file carry its line and column; errors from an override
/// name the override.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Config, ConfigError> {
    let (text, origin) = match path {
        Some(p) => (
            std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.to_path_buf(), source })?,
            p.display().to_string(),
        ),
        None => (String::new(), "defaults".to_string()),
    };
    let parsed: Config = toml::from_str(&text).map_err(|e| ConfigError::Parse { origin: origin.clone(), message: e.to_string() })?;
    if overrides.is_empty() {
        return Ok(parsed);
    }
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| ConfigError::Parse { origin, message: e.to_string() })?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    Config::deserialize(toml::Value::Table(table)).map_err(|e| ConfigError::Parse {
        origin: format!("--set {}", overrides.join(" --set ")),
        message: e.to_string(),
    })
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| ConfigError::BadOverride(assignment.into()))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::BadOverride(assignment.into()));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, head) = parts.split_last().expect("non-empty key");
    let mut cur = table;
    for p in head {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(invalid(key, format!("`{p}` is not a section"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = Config::default();
        let text = toml::to_string(&c).unwrap();
        let back: Config = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_parse_values_and_strings() {
        let c = load(None, &["physics.k_f=3.5".into(), "potential.family=power-law".into(), "converge.k_f=[4, 6]".into()])
            .unwrap();
        assert_eq!(c.physics.k_f, 3.5);
        assert_eq!(c.potential.family, "power-law");
        assert_eq!(c.converge.k_f, vec![4.0, 6.0]);
    }

    #[test]
    fn unknown_field_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "[physics]\nk_f = 2.0\n\n[patches]\nmm = 4\n").unwrap();
        let e = load(Some(&p), &[]).unwrap_err().to_string();
        assert!(e.contains("line 5"), "{e}");
        assert!(e.contains("mm"), "{e}");
    }

    #[test]
    fn bad_override_rejected() {
        assert!(matches!(load(None, &["physics".into()]), Err(ConfigError::BadOverride(_))));
        assert!(load(None, &["physics.k_f=\"x\"".into()]).is_err());
    }

    #[test]
    fn empty_schedule_rejected() {
        let c = load(None, &["converge.k_f=[]".into()]).unwrap();
        let e = c.schedule().unwrap_err().to_string();
        assert!(e.contains("converge.k_f") && e.contains("empty"), "{e}");
    }
}
