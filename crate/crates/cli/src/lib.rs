//! Command-line front end: loads a run config, evaluates one computation and
//! emits its tables as CSV or JSON.

pub mod commands;
pub mod config;
pub mod table;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use gapsit::medium::Band;
use gapsit::ErrorClass;
use thiserror::Error;

pub use commands::Outcome;
pub use config::{Grid, OutputFormat, RunConfig};
pub use table::{Cell, Report, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Core(#[from] gapsit::Error),
}

impl CliError {
    /// 1 validation, 2 numerical failure, 3 physics violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Parse(_) => 1,
            CliError::Core(e) => match e.class() {
                ErrorClass::Validation => 1,
                ErrorClass::Numerical => 2,
                ErrorClass::Physics => 3,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "gapsit",
    version,
    about = "Soliton spectrum of two-level atoms in a frequency gap medium"
)]
pub struct Cli {
    /// JSON run config; the built-in reference parameters when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. `atoms.rho=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Output format; overrides `output_format` from the config.
    #[arg(long, global = true)]
    pub format: Option<FormatArg>,
    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    Lower,
    Gap,
    Upper,
}

impl From<BandArg> for Band {
    fn from(b: BandArg) -> Self {
        match b {
            BandArg::Lower => Band::LowerBranch,
            BandArg::Gap => Band::Gap,
            BandArg::Upper => Band::UpperBranch,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Permeability, refractive index and wavenumber over the grid.
    Medium,
    /// One Bethe string: its image, necessary condition and equation residuals.
    String {
        #[arg(long, allow_negative_numbers = true)]
        carrying: f64,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "lower")]
        band: BandArg,
    },
    /// Ordinary-soliton dispersion and velocities over the grid.
    Ordinary {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
    /// Gap-soliton bands and pair parameters for l = 1..l_max.
    Gap {
        #[arg(long)]
        l_max: usize,
        #[arg(long, allow_negative_numbers = true)]
        carrying: f64,
    },
    /// Composite soliton from one string.
    Composite {
        #[arg(long, allow_negative_numbers = true)]
        carrying: f64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        pairs: usize,
    },
    /// Vacuum soliton dispersion, velocity and size.
    Vacuum {
        #[arg(long, default_value_t = 10)]
        n: usize,
    },
}

pub fn execute(cfg: &RunConfig, command: &Command) -> Result<Outcome, CliError> {
    match *command {
        Command::Medium => commands::medium(cfg),
        Command::String { carrying, n, band } => commands::string(cfg, carrying, n, band.into()),
        Command::Ordinary { n } => commands::ordinary(cfg, n),
        Command::Gap { l_max, carrying } => commands::gap(cfg, l_max, carrying),
        Command::Composite { carrying, n, pairs } => commands::composite(cfg, carrying, n, pairs),
        Command::Vacuum { n } => commands::vacuum(cfg, n),
    }
}

pub fn render(report: &Report, format: OutputFormat) -> String {
    match format {
        OutputFormat::Csv => report.to_csv(),
        OutputFormat::Json => report.to_json(),
    }
}

/// Loads the config and runs the command. Returns the rendered output and
/// the process exit code.
pub fn output(cli: &Cli) -> Result<(String, i32), CliError> {
    let cfg = config::load(cli.config.as_deref(), &cli.overrides)?;
    let format = match cli.format {
        Some(FormatArg::Csv) => OutputFormat::Csv,
        Some(FormatArg::Json) => OutputFormat::Json,
        None => cfg.output_format,
    };
    let outcome = execute(&cfg, &cli.command)?;
    Ok((render(&outcome.report, format), outcome.exit_code))
}

/// [`output`], written to `--out` or standard output.
pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let (text, code) = output(cli)?;
    match &cli.out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?
        }
        None => print!("{text}"),
    }
    Ok(code)
}
