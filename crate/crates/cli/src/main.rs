//! `debtinf`: batch front end for the debt-inflation toolkit.
//!
//! Every subcommand writes CSV atomically and a `<out>.manifest` next to it.
//! Exit status is 0 on success, 1 on estimation or I/O failure and 2 on
//! usage errors, including invalid configs and inputs.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Estimation(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "debtinf", version, about = "Debt-inflation model, shock analytics and panel estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the model over a price-level grid.
    EqSweep(EqSweepArgs),
    /// Default share and its second differences against log inflation.
    DefaultCurve(DefaultCurveArgs),
    /// Draw a synthetic firm panel or return panel.
    Simulate(SimulateArgs),
    /// Run a panel regression on a firm-year CSV.
    Estimate(EstimateArgs),
    /// Fama-MacBeth regression of returns on lagged leverage.
    Fmb(FmbArgs),
    /// Leverage-sorted portfolios with a high-minus-low spread.
    Sort(SortArgs),
    /// Days since the last price increase, observed or simulated.
    Duration(DurationArgs),
    /// Debt-inflation shock series for one leverage or a set of balance sheets.
    DebtShock(DebtShockArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, default_value_t = 1.0)]
    pub pmin: f64,
    #[arg(long, default_value_t = 100.0)]
    pub pmax: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Flexible,
    MenuCost,
}

#[derive(Debug, Args)]
pub struct EqSweepArgs {
    /// Calibration file; the built-in default calibration when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, value_enum, default_value_t = Mode::MenuCost)]
    pub mode: Mode,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DefaultCurveArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Mass of firms that scales the default share into a count.
    #[arg(long, default_value_t = 1.0)]
    pub firm_mass: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SimulateKind {
    Panel,
    Returns,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimulateKind::Panel)]
    pub kind: SimulateKind,
    /// Flat key=value generator settings.
    #[arg(long, alias = "config")]
    pub panel_config: Option<PathBuf>,
    /// Required: runs never draw from system entropy.
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the annual price levels used by the shock DGP as `date,level`.
    #[arg(long)]
    pub prices_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EstimateSpec {
    Did,
    Event,
    Iv,
    Shock,
    Longdiff,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Effects {
    Year,
    IndustryYear,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub spec: EstimateSpec,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// `date,level` price path; year-end levels feed the shock and iv specs.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Comma-separated control names.
    #[arg(long, value_delimiter = ',')]
    pub controls: Vec<String>,
    #[arg(long, value_enum, default_value_t = Effects::Year)]
    pub effects: Effects,
    #[arg(long, default_value_t = 1920)]
    pub post_year: i32,
    /// Omitted event year (default 1918) or price base year (default 1917).
    #[arg(long)]
    pub base_year: Option<i32>,
    #[arg(long, default_value_t = 1)]
    pub lags: usize,
    #[arg(long, default_value_t = 1918)]
    pub from: i32,
    #[arg(long, default_value_t = 1923)]
    pub to: i32,
    #[arg(long)]
    pub lagged_from: Option<i32>,
    /// Nested plain-text report of the fit.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FmbArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Add each firm's full-sample market beta as a characteristic.
    #[arg(long)]
    pub market_beta: bool,
}

#[derive(Debug, Args)]
pub struct SortArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub buckets: usize,
}

#[derive(Debug, Args)]
pub struct DurationArgs {
    /// `date,level` price series.
    #[arg(long = "in", required_unless_present = "simulate", conflicts_with = "simulate")]
    pub input: Option<PathBuf>,
    /// Simulate sticky prices under rising inflation instead of reading a series.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    pub setters: usize,
    #[arg(long, default_value_t = 10)]
    pub years: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DebtShockArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, required_unless_present = "balance_sheets", conflicts_with = "balance_sheets")]
    pub leverage: Option<f64>,
    /// `firm_id,liabilities,equity` CSV; writes cross-sectional mean, p10 and p90.
    #[arg(long)]
    pub balance_sheets: Option<PathBuf>,
    #[arg(long, default_value_t = 1917)]
    pub base_year: i32,
    #[arg(long)]
    pub out: PathBuf,
}

/// The command-line spelling of an enum value.
pub fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("DEBTINF_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("DEBTINF_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::EqSweep(a) => commands::eq_sweep(&a),
        Command::DefaultCurve(a) => commands::default_curve(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Estimate(a) => commands::estimate(&a),
        Command::Fmb(a) => commands::fmb(&a),
        Command::Sort(a) => commands::sort(&a),
        Command::Duration(a) => commands::duration(&a),
        Command::DebtShock(a) => commands::debt_shock(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("debtinf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
