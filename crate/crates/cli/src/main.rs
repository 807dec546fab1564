//! `fuzzgrain`: batch runs of fuzzy-measurement channel analyses.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid arguments,
//! 3 problem too large for the configured budgets, 4 eigensolver failure.

mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "fuzzgrain", version, about = "Fuzzy-measurement and coarse-graining channel analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the symmetry sectors of an n-qudit register.
    Blocks(commands::BlocksArgs),
    /// Spectrum of one channel, sector by sector.
    Spectrum(commands::SpectrumArgs),
    /// Volume contraction of random channels over a range of n.
    Volume(commands::VolumeArgs),
    /// Concurrence maps of the single-impurity XX chain.
    Entwave(commands::EntwaveArgs),
    /// Histogram of one sector's spectrum over random channels.
    Ensemble(commands::EnsembleArgs),
    /// Write a channel's weights and permutations.
    Channel(commands::ChannelArgs),
}

#[derive(Debug)]
pub enum CliError {
    Core(fuzzgrain::Error),
    Usage(String),
    Io(std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_feasibility() => 3,
            CliError::Core(e) if e.is_numerical() => 4,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<fuzzgrain::Error> for CliError {
    fn from(e: fuzzgrain::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Blocks(args) => commands::blocks(args),
        Command::Spectrum(args) => commands::spectrum(args),
        Command::Volume(args) => commands::volume(args),
        Command::Entwave(args) => commands::entwave(args),
        Command::Ensemble(args) => commands::ensemble(args),
        Command::Channel(args) => commands::channel(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fuzzgrain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
