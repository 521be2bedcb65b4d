use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use molqca::config::{parse_config_as, ConfigError};
use molqca::experiments::{self, ExperimentKind};
use molqca::output::write_csv;
use molqca::Error;

/// Molecular QCA cell switching simulator.
///
/// Exit status: 0 on success, 1 for usage, configuration or I/O errors,
/// 2 when a numerical run fails.
#[derive(Debug, Parser)]
#[command(name = "molqca", version, arg_required_else_help = true)]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for multistart steady-state searches.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads for parameter grids.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Steady-state polarization branches against bias.
    Steady,
    /// Up and down bias sweeps with an equilibration hold.
    Hysteresis,
    /// Write/hold protocol for both bits.
    Memory,
    /// Dissipated energy over a switching-time grid.
    Dissipation,
    /// Excess energy of isolated sweeps.
    Excess,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Steady => ExperimentKind::SteadyCurve,
            Command::Hysteresis => ExperimentKind::Hysteresis,
            Command::Memory => ExperimentKind::Memory,
            Command::Dissipation => ExperimentKind::DissipationSweep,
            Command::Excess => ExperimentKind::ExcessIsolated,
        }
    }
}

enum Failure {
    Usage(String),
    Config(ConfigError),
    Run(Error),
}

impl Failure {
    fn report(&self) -> ExitCode {
        match self {
            Failure::Usage(msg) => {
                eprintln!("error: {msg}");
                ExitCode::from(1)
            }
            Failure::Config(e) => {
                eprintln!("config error [{}]: {e}", e.code());
                ExitCode::from(1)
            }
            Failure::Run(e) if e.is_config() => {
                eprintln!("config error: {e}");
                ExitCode::from(1)
            }
            Failure::Run(e @ (Error::Io { .. } | Error::Csv { .. })) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
            Failure::Run(e) => {
                eprintln!("numerical failure: {e}");
                ExitCode::from(2)
            }
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let kind = cli.command.kind();
    let text = match &cli.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            Failure::Config(ConfigError::Read {
                path: path.clone(),
                message: e.to_string(),
            })
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config_as(&text, Some(kind)).map_err(Failure::Config)?;
    if let Some(out) = cli.out {
        cfg.out_dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.spec.seed = seed;
    }
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Failure::Usage("--workers must be at least 1".into()));
        }
        cfg.spec.workers = w;
    }

    if !cli.quiet {
        eprintln!("running {kind} ...");
    }
    let files = experiments::run(&cfg.spec).map_err(Failure::Run)?;
    std::fs::create_dir_all(&cfg.out_dir).map_err(|source| {
        Failure::Run(Error::Io {
            path: cfg.out_dir.clone(),
            source,
        })
    })?;
    for f in &files {
        let path = cfg.out_dir.join(&f.name);
        write_csv(&f.table, &path).map_err(Failure::Run)?;
        if !cli.quiet {
            eprintln!("wrote {} ({} rows)", path.display(), f.table.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.report(),
    }
}
