//! Command-line driver: config loading, problem construction, the seven
//! commands, CSV output and run manifests.

pub mod build;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use config::{Command, RunConfig};
use error::CliError;
use output::{Manifest, Timings};

/// One run as requested on the command line.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub override_diagnostics: bool,
}

/// Where a finished run put its files.
#[derive(Debug, Clone)]
pub struct Report {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
}

/// Loads the config, computes every table, then writes tables and manifest.
/// Nothing is written when the run fails before its outputs are complete.
pub fn run(inv: &Invocation) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut cfg = config::load(&inv.config, inv.command)?;
    if let Some(seed) = inv.seed {
        cfg.seed = seed;
    }
    let output_dir =
        inv.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("out").join(inv.command.name()));
    let echo = RunConfig { out: None, ..cfg.clone() };
    let ctx = commands::Context {
        config: &cfg,
        exec: build::execution(cfg.execution),
        override_diagnostics: inv.override_diagnostics,
    };
    let setup = start.elapsed().as_secs_f64();
    let outcome = commands::run(inv.command, &ctx)?;
    let compute = start.elapsed().as_secs_f64() - setup;
    let outputs = output::write_tables(&output_dir, &outcome.tables)?;
    let files = outputs.iter().map(|o| o.file.clone()).collect();
    let manifest = Manifest {
        command: inv.command,
        config: &echo,
        versions: output::versions(),
        output_dir: std::path::absolute(&output_dir).unwrap_or_else(|_| output_dir.clone()),
        outputs,
        warnings: &outcome.warnings,
        override_diagnostics: inv.override_diagnostics,
        timings: Timings {
            setup_seconds: setup,
            compute_seconds: compute,
            total_seconds: start.elapsed().as_secs_f64(),
        },
    };
    output::write_manifest(&output_dir, &manifest)?;
    match outcome.failure {
        Some(e) => Err(e),
        None => Ok(Report { output_dir, files, warnings: outcome.warnings }),
    }
}
