//! `tilearn` — command-line harness for the transformation-invariant
//! learning toolkit.
//!
//! Three subcommands: `game` (selection rules and MW reductions), `vc`
//! (shattering searches, growth bounds, sample-size calculators), and
//! `exp` (the hypercube experiment). Inputs come from a key=value config
//! file; outputs are plain-text reports, traces, and CSVs, each headed by
//! the config digest and seed so identical invocations are byte-identical.
//!
//! Exit codes: 0 success, 2 config error, 3 precondition violation,
//! 4 internal invariant failure.

mod config;
mod run;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Precondition(String),
    Internal(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Precondition(_) => "precondition",
            CliError::Internal(_) => "internal",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Precondition(m) | CliError::Internal(m) => {
                write!(f, "{m}")
            }
        }
    }
}

impl From<tilearn_core::domain::DomainError> for CliError {
    fn from(e: tilearn_core::domain::DomainError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<tilearn_core::transform::TransformError> for CliError {
    fn from(e: tilearn_core::transform::TransformError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<tilearn_core::hypothesis::LearnError> for CliError {
    fn from(e: tilearn_core::hypothesis::LearnError) -> Self {
        CliError::Precondition(e.to_string())
    }
}

impl From<tilearn_core::game::GameError> for CliError {
    fn from(e: tilearn_core::game::GameError) -> Self {
        match &e {
            tilearn_core::game::GameError::BoundViolated { .. } => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<tilearn_core::vc::VcError> for CliError {
    fn from(e: tilearn_core::vc::VcError) -> Self {
        match &e {
            tilearn_core::vc::VcError::LemmaViolated(_) | tilearn_core::vc::VcError::BadWitness => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

impl From<tilearn_core::experiment::ExperimentError> for CliError {
    fn from(e: tilearn_core::experiment::ExperimentError) -> Self {
        match &e {
            tilearn_core::experiment::ExperimentError::LabelNotPreserved => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Precondition(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "tilearn",
    about = "Transformation-invariant learning rules, reductions, and VC checks"
)]
pub struct Cli {
    /// Key=value config file with `[section]` headers.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; required for stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Selection rules and MW reductions.
    Game {
        #[arg(value_enum)]
        kind: GameKind,
    },
    /// Shattering searches, growth bounds, and sample-size calculators.
    Vc {
        #[arg(value_enum)]
        kind: VcKind,
    },
    /// The hypercube experiment (baseline vs augmented SGD).
    Exp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum GameKind {
    Minmax,
    MwErm,
    Regret,
    MwRegret,
    Coverage,
    Inflate,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VcKind {
    Shatter,
    Sauer,
    LinearClosure,
    Boolean,
    Lowerbound,
    SampleSize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run::execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error code={} kind={} msg=\"{}\"", e.code(), e.kind(), e);
            ExitCode::from(e.code())
        }
    }
}
