//! Front end for the bosonize workbench: configuration, orchestration,
//! report files and the run manifest.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use commands::{failing, CacheHandle, CmdError, Command, Verdict};
use config::Config;
use output::{OutputDir, OutputFile};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

/// Environment variable that overrides the default output directory.
pub const OUT_ENV: &str = "BOSONIZE_OUT";
pub const DEFAULT_OUT: &str = "bosonize-out";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub resolved: Config,
    pub threads: Option<usize>,
    pub cache_file: Option<PathBuf>,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputFile>,
    pub verdicts: Vec<Verdict>,
    pub pass: bool,
    pub failing: Vec<String>,
}

/// Everything a run needs besides the configuration itself.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// `--out`, then the environment, then the default.
pub fn resolve_out(flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT),
    }
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

/// Runs one command with an already loaded configuration and writes its
/// reports, the verdict list and the manifest.
pub fn execute(cmd: Command, cfg: &Config, opts: &RunOptions) -> Result<RunManifest, CmdError> {
    let started = now_ms();
    let mut out = OutputDir::create(&resolve_out(opts.out.as_deref()))?;
    let mut cache = if cmd.uses_cache() && cfg.cache.enabled {
        let path = cfg.cache.file.clone().unwrap_or_else(|| out.dir.join("pair-cache.json"));
        CacheHandle::open(path)?
    } else {
        CacheHandle::disabled()
    };
    let verdicts = commands::run(cmd, cfg, &mut out, &mut cache)?;
    cache.save()?;
    out.json(&format!("{}_verdicts.json", cmd.name()), &verdicts)?;
    let failing = failing(&verdicts);
    let manifest = RunManifest {
        tool: "bosonize".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        command: cmd,
        config_path: opts.config_path.clone(),
        overrides: opts.overrides.clone(),
        resolved: cfg.clone(),
        threads: opts.threads,
        cache_file: cache.path.clone(),
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
        outputs: out.files.clone(),
        pass: failing.is_empty(),
        failing,
        verdicts,
    };
    std::fs::write(out.dir.join(MANIFEST_FILE), output::to_json(&manifest))?;
    Ok(manifest)
}
