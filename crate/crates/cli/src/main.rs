mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Simulate, learn and reconstruct single-qubit control pulses.
#[derive(Debug, Parser)]
#[command(name = "qsp-pulse", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config file for the subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "QSP_PULSE_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Only errors go to stderr and nothing to stdout.
    #[arg(long, short, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact propagators on the experiment grid (samples.csv).
    Simulate,
    /// Per-segment phases from exact segment propagators (phases.csv).
    Digitize(DigitizeArgs),
    /// Tomography followed by phase learning (phases.csv).
    Learn,
    /// Simulated tomography (ptms.csv, samples.csv).
    Tomography,
    /// Reconstruction from exact segment averages (pulse_table.csv, error_table.csv).
    Reconstruct,
    /// Fisher information at one configuration (fim.csv, fisher.csv).
    Fisher(FisherArgs),
    /// Full workflow (pulse_table.csv, error_table.csv, phases.csv).
    EndToEnd,
    /// Noiseless bias against L (scaling.csv, slope in the footer row).
    BiasSweep(BiasSweepArgs),
    /// Spread of learned phases under entry noise (variance.csv).
    VarianceSweep(VarianceSweepArgs),
    /// Normalized determinant of the FIM against ν (dfi.csv).
    DfiSweep(DfiSweepArgs),
}

#[derive(Debug, Args)]
pub struct DigitizeArgs {
    #[arg(long, value_parser = config::parse_pulse)]
    pub pulse: Option<qsp_pulse::pipeline::PulseSpec>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long = "L", alias = "segments")]
    pub segments: Option<usize>,
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FisherArgs {
    #[arg(long = "L", alias = "segments")]
    pub segments: Option<usize>,
    #[arg(long)]
    pub shots: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub nu: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BiasSweepArgs {
    #[arg(long, value_parser = config::parse_pulse)]
    pub pulse: Option<qsp_pulse::pipeline::PulseSpec>,
    /// Comma-separated segment counts.
    #[arg(long = "Ls", value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    #[arg(long, value_parser = config::parse_method)]
    pub method: Option<qsp_pulse::reconstruct::Method>,
    /// Skip Richardson extrapolation.
    #[arg(long)]
    pub no_re: bool,
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VarianceSweepArgs {
    #[arg(long, value_parser = config::parse_pulse)]
    pub pulse: Option<qsp_pulse::pipeline::PulseSpec>,
    #[arg(long = "L", alias = "segments")]
    pub segments: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DfiSweepArgs {
    /// Comma-separated segment counts.
    #[arg(long = "Ls", value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    /// Comma-separated sampling ranges ν.
    #[arg(long, value_delimiter = ',')]
    pub nus: Option<Vec<f64>>,
    #[arg(long)]
    pub shots: Option<f64>,
}

/// Exit status 1 for anything the user can fix in the config or flags,
/// 2 for failures while running.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Runtime(String),
}

impl From<qsp_pulse::Error> for Failure {
    fn from(e: qsp_pulse::Error) -> Self {
        match e {
            qsp_pulse::Error::Config(m) => Failure::Config(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { log::LevelFilter::Error } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).parse_env("RUST_LOG").init();

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    }

    match commands::dispatch(&cli) {
        Ok(files) => {
            if !cli.quiet {
                for f in files {
                    println!("{}", f.display());
                }
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
