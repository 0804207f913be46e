//! `hhgq` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure while writing outputs, 2 config
//! error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "hhgq", version, about = "Quantum-optical high harmonic generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a configuration key; repeatable, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Conditioned cat state: Wigner grid and quadrature distributions.
    CatWigner,
    /// Coherent/incoherent spectrum, g1 and g2.
    Spectrum,
    /// Quadratic-order Gaussian state of the harmonic modes.
    Squeeze,
    /// Per-mode displacement amplitudes chi_q.
    Chi,
    /// Phase-averaged driving state.
    PhaseAvg,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CatWigner => "cat-wigner",
            Command::Spectrum => "spectrum",
            Command::Squeeze => "squeeze",
            Command::Chi => "chi",
            Command::PhaseAvg => "phase-avg",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, config::ConfigError> {
    let mut raw = RawConfig::defaults();
    if let Some(path) = &cli.config {
        raw.merge_file(path)?;
    }
    for pair in &cli.set {
        raw.merge_set(pair)?;
    }
    if let Some(dir) = &cli.out {
        raw.override_output_dir(dir);
    }
    let cfg = raw.resolve()?;
    match cli.command {
        Command::CatWigner => raw.check_cat(&cfg)?,
        Command::Spectrum => raw.check_two_color(&cfg)?,
        Command::Squeeze => raw.check_squeeze(&cfg)?,
        Command::Chi | Command::PhaseAvg => {}
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::CatWigner => commands::cat_wigner(&cfg),
        Command::Spectrum => commands::spectrum_cmd(&cfg),
        Command::Squeeze => commands::squeeze(&cfg),
        Command::Chi => commands::chi(&cfg),
        Command::PhaseAvg => commands::phase_avg(&cfg),
    };
    let artifacts = match result {
        Ok(a) => a,
        Err(e) => {
            eprintln!("numerical error: {}: {e}", commands::error_name(&e));
            return ExitCode::from(3);
        }
    };
    let names = artifacts.names().join(", ");
    match artifacts.commit(cli.command.name(), &cfg) {
        Ok(manifest) => {
            println!("wrote {names} and {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(1)
        }
    }
}
