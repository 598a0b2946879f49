//! `cwlm validate|simulate|sweep --config <path> [--out <dir>] [--force] [--plots]`
//!
//! Exit codes: 0 ok, 1 usage or config error, 2 validity violation,
//! 3 numeric or output failure. `CWLM_THREADS` caps the worker threads.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod output;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use run::Options;

#[derive(Parser, Debug)]
#[command(
    name = "cwlm",
    version,
    about = "Joint output statistics of two weakly measured qubit observables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the detector inequalities of the configured model.
    Validate(Args),
    /// Write distributions and derived products for every configured time.
    Simulate(Args),
    /// As simulate, plus a summary table of moments and certainty slopes vs time.
    Sweep(Args),
}

#[derive(clap::Args, Debug)]
struct Args {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even if the validity checks fail.
    #[arg(long)]
    force: bool,
    /// Also write SVG plots.
    #[arg(long)]
    plots: bool,
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CWLM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "CWLM_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))
}

type Handler = fn(&RunConfig, &Options) -> Result<(), CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let (args, cmd): (&Args, Handler) = match &cli.command {
        Command::Validate(a) => (a, run::validate),
        Command::Simulate(a) => (a, |c, o| run::simulate(c, o).map(|_| ())),
        Command::Sweep(a) => (a, |c, o| run::sweep(c, o).map(|_| ())),
    };
    let cfg = RunConfig::load(&args.config)?;
    let opts = Options {
        out: args.out.clone(),
        force: args.force,
        plots: args.plots,
    };
    cmd(&cfg, &opts)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
