//! `revud`: command-line front end for the discrimination toolkit.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod problem;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed files, unknown fields, out-of-range parameters: exit 2.
    #[error("input error: {0}")]
    Input(String),
    /// Solver failures and other numerical errors: exit 1.
    #[error("computation error: {0}")]
    Compute(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Compute(_) => 1,
        }
    }
}

impl From<revud_core::Error> for CliError {
    fn from(e: revud_core::Error) -> Self {
        match e {
            revud_core::Error::InvalidParameter(m) => CliError::Input(m),
            other => CliError::Compute(other.to_string()),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser, Debug)]
#[command(
    name = "revud",
    version,
    about = "State and channel discrimination with abstention: SDPs, divergences, bounds"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand. Values given here override the
/// `params` block of the input file.
#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem file (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Abstention weights; comma separated for a sweep.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub eta: Option<Vec<f64>>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Cascade depth, `alpha = 1 + 2^-l`.
    #[arg(long, global = true)]
    pub l: Option<u32>,
    /// Numbers of channel uses; comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Type-I error budget of the hypothesis-testing divergence.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Seed for every randomized check.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance for the consistency flags in the report.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Include optimal measurements, dual operators and optimizers.
    #[arg(long, global = true)]
    pub certificates: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum DivergenceKind {
    All,
    Sandwiched,
    Geometric,
    GeometricSdp,
    Umegaki,
    Bs,
    Hypothesis,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum RadiusKind {
    Sandwiched,
    Geometric,
    Umegaki,
    Bs,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Divergences between the first two states of the file.
    Divergence {
        #[arg(long, value_enum, default_value = "all")]
        kind: DivergenceKind,
    },
    /// Divergence radius of the states.
    Radius {
        #[arg(long, value_enum, default_value = "umegaki")]
        kind: RadiusKind,
    },
    /// Optimal success probability of the discrimination game with
    /// abstention, its hypothesis-testing certificate and the radius bound.
    StateGame,
    /// Minimal trace of an operator dominating every input operator.
    Qre,
    /// Quantum-over-classical success ratio at uniform priors.
    Advantage,
    /// Geometric Rényi divergences between every ordered pair of channels.
    ChannelDivergence,
    /// Error-exponent bound for adaptive discrimination of the channels.
    ChannelBound {
        /// Also report the values for l = 1..3.
        #[arg(long)]
        sequence: bool,
    },
    /// Random adaptive protocols against the error-exponent bound.
    Simulate {
        #[arg(long, default_value_t = 50)]
        protocols: usize,
        /// Reference dimension of the random protocols.
        #[arg(long, default_value_t = 2)]
        ref_dim: usize,
    },
    /// Runs every applicable property check on the instance.
    Validate {
        /// Random protocols per (n, alpha) for channel files.
        #[arg(long, default_value_t = 10)]
        protocols: usize,
    },
}

fn run(cli: &Cli) -> Result<report::Report, CliError> {
    let path = cli.common.input.as_ref().ok_or_else(|| CliError::Input("--input is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let problem = problem::parse_problem(&text)?;
    commands::dispatch(&cli.command, &cli.common, &problem, path.display().to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("revud: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let text = match cli.common.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    let written = match &cli.common.output {
        Some(p) => std::fs::write(p, &text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("revud: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if !report.all_checks_passed() {
        eprintln!("revud: {} check(s) failed", report.checks.iter().filter(|c| !c.passed).count());
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
