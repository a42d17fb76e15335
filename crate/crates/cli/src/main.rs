use bosonize_cli::commands::Command;
use bosonize_cli::{config, execute, RunOptions};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Bosonization workbench for the mean-field Fermi gas on the torus.
#[derive(Parser)]
#[command(name = "bosonize", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration value, e.g. `--set patches.m=32`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (default: $BOSONIZE_OUT, else ./bosonize-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel stages.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed of the random-instance checks (same as `--set verify.seed=N`).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Particle number, ħ and κ of the Fermi ball.
    Ball,
    /// Patch decomposition and exact against asymptotic pair counts.
    Patches,
    /// Hartree–Fock energy, trace correlation energy and RPA closed form.
    Rpa,
    /// Gap between trace and closed form along a (k_F, M) schedule.
    Converge,
    /// Lattice-count error exponent and pair-count asymptotics.
    Count,
    /// Matrix identities, kernel sizes and closed-form properties.
    Verify,
    /// Exact Fock-space identity checks.
    Oracle,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Ball => Command::Ball,
            Cmd::Patches => Command::Patches,
            Cmd::Rpa => Command::Rpa,
            Cmd::Converge => Command::Converge,
            Cmd::Count => Command::Count,
            Cmd::Verify => Command::Verify,
            Cmd::Oracle => Command::Oracle,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides = cli.overrides.clone();
    if let Some(s) = cli.seed {
        overrides.push(format!("verify.seed={s}"));
    }
    let cfg = match config::load(cli.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let opts = RunOptions { config_path: cli.config.clone(), overrides, out: cli.out.clone(), threads: cli.threads };
    match execute(cli.command.into(), &cfg, &opts) {
        Ok(m) if m.pass => ExitCode::SUCCESS,
        Ok(m) => {
            eprintln!("failed checks: {}", m.failing.join(", "));
            ExitCode::from(1)
        }
        Err(bosonize_cli::commands::CmdError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
