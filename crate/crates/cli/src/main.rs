//! `vibshape` command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 file I/O failure.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use crate::output::Output;

#[derive(Debug, Parser)]
#[command(
    name = "vibshape",
    version,
    about = "Input shaping, vibration analysis, DOE and monitoring"
)]
struct Cli {
    /// Directory receiving every output file and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Seed for stochastic generators (e.g. simulated sensor noise).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Encoding of plot-ready tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Design an input shaper and write its sensitivity curve.
    Design(commands::design::Args),
    /// Simulate a point-to-point move on a flexible endpoint.
    Simulate(commands::simulate::Args),
    /// Vibration metrics and spectrum of an acceleration trace.
    Analyze(commands::analyze::Args),
    /// Fit a two-level factorial experiment.
    Doe(commands::doe::Args),
    /// Replay a trace through the rolling-RMS alarm monitor.
    Monitor(commands::monitor::Args),
}

/// Filesystem failures anywhere in the cause chain map to 3; everything else
/// is a validation failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|e| {
        e.downcast_ref::<std::io::Error>().is_some()
            || e.downcast_ref::<vibshape::Error>()
                .is_some_and(vibshape::Error::is_io)
    });
    if io {
        3
    } else {
        2
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Design(_) => "design",
            Command::Simulate(_) => "simulate",
            Command::Analyze(_) => "analyze",
            Command::Doe(_) => "doe",
            Command::Monitor(_) => "monitor",
        }
    }

    fn run(self, out: &mut Output) -> anyhow::Result<()> {
        match self {
            Command::Design(a) => commands::design::run(a, out),
            Command::Simulate(a) => commands::simulate::run(a, out),
            Command::Analyze(a) => commands::analyze::run(a, out),
            Command::Doe(a) => commands::doe::run(a, out),
            Command::Monitor(a) => commands::monitor::run(a, out),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Output::new(cli.command.name(), cli.out_dir, cli.format, cli.seed);
    match cli.command.run(&mut out).and_then(|()| out.finish()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
