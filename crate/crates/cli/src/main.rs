//! `hiddenpt`: parameter sweeps for the driven two-mode open system.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Mode, Overrides};
use output::Format;

const WORKERS_ENV: &str = "HIDDENPT_WORKERS";

#[derive(Parser, Debug)]
#[command(name = "hiddenpt", version, about = "Exceptional-point sweeps for a driven two-mode open system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic versus numeric eigenvalues of the tracked states.
    Spectrum(CommonArgs),
    /// Eigenvector coalescence of the non-Hermitian Hamiltonian.
    EpScan(CommonArgs),
    /// Eigenvector coalescence of the first-moment dynamical matrix.
    LepScan(CommonArgs),
    /// Liouvillian spectrum against the first-moment eigenvalues.
    LiouvillianCheck(CommonArgs),
    /// Quantum-jump ensemble against the master equation.
    Trajectories(CommonArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON config; missing fields take the command defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fock levels per mode.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Trajectory seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Emit JSON lines instead of CSV.
    #[arg(long)]
    json: bool,
}

impl Command {
    fn split(self) -> (Mode, CommonArgs) {
        match self {
            Command::Spectrum(a) => (Mode::HamiltonianSpectrum, a),
            Command::EpScan(a) => (Mode::EpScan, a),
            Command::LepScan(a) => (Mode::LepScan, a),
            Command::LiouvillianCheck(a) => (Mode::LiouvillianCheck, a),
            Command::Trajectories(a) => (Mode::Trajectories, a),
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn configure_workers() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| ConfigError::Env {
        name: WORKERS_ENV,
        reason: format!("expected a positive integer, got `{raw}`"),
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::Env {
            name: WORKERS_ENV,
            reason: e.to_string(),
        })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let (mode, args) = cli.command.split();
    let overrides = Overrides {
        cutoff: args.cutoff,
        seed: args.seed,
    };
    let cfg = match configure_workers().and_then(|()| config::load_config(args.config.as_deref(), mode, overrides)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let run = commands::run(&cfg);
    let format = if args.json { Format::JsonLines } else { Format::Csv };
    let written = match &args.out {
        Some(path) => File::create(path).and_then(|f| output::write_table(BufWriter::new(f), format, &cfg, &run.table)),
        None => output::write_table(io::stdout().lock(), format, &cfg, &run.table),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_CONFIG);
    }
    let _ = io::stdout().flush();
    match run.failure {
        Some(msg) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
        None => ExitCode::SUCCESS,
    }
}
