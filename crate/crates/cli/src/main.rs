use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mece_cli::config::Command;
use mece_cli::{run, Invocation};

/// Modified error in constitutive equations: analysis and inversion runs.
#[derive(Debug, Parser)]
#[command(name = "mece", version)]
struct Args {
    command: Command,
    /// TOML config, or the manifest.json of an earlier run to replay it
    #[arg(long)]
    config: PathBuf,
    /// output directory (default: config `out`, else out/<command>)
    #[arg(long)]
    out: Option<PathBuf>,
    /// overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// continue past a failed data-sufficiency diagnostic, recording a warning
    #[arg(long)]
    override_diagnostics: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let inv = Invocation {
        command: args.command,
        config: args.config,
        out: args.out,
        seed: args.seed,
        override_diagnostics: args.override_diagnostics,
    };
    match run(&inv) {
        Ok(report) => {
            for f in &report.files {
                println!("{}", report.output_dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("mece: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
