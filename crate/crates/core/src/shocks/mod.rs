//! Price-level analytics: the cumulative debt-inflation shock, forward
//! premia, log inflation, deflated total returns and the number of days
//! since a series last increased.

mod path;
mod sticky;
mod transforms;

use thiserror::Error;

pub use path::{read_balance_sheets, read_series_csv, write_series_csv, DatedValue, Frequency, PricePath};
pub use sticky::{inflation_duration_pairs, simulate_sticky_prices, InflationDuration, StickyPriceConfig, StickyPriceSim};
pub use transforms::{
    cross_section_summary, debt_inflation, debt_inflation_series, duration_since_last_increase, forward_premium,
    log_inflation, real_total_log_return, year_end_levels, CrossSectionPoint, LeverageBase,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShockError {
    #[error("leverage {0} outside [0, 1]")]
    InvalidLeverage(f64),
    #[error("cumulative inflation {0} must exceed -1")]
    InflationBelowMinusOne(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("balance sheet for firm {firm_id} invalid: {reason}")]
    InvalidBalanceSheet { firm_id: String, reason: &'static str },
    #[error("observation {index}: level must be positive, got {value}")]
    NonPositiveLevel { index: usize, value: f64 },
    #[error("observation {index}: dates must be strictly increasing")]
    DatesNotIncreasing { index: usize },
    #[error("observation {index}: gap in {frequency} series between {prev} and {next}")]
    Gap { index: usize, frequency: &'static str, prev: chrono::NaiveDate, next: chrono::NaiveDate },
    #[error("need at least {needed} observations, got {got}")]
    InsufficientObservations { needed: usize, got: usize },
    #[error("base year {0} not covered by the price path")]
    BaseYearMissing(i32),
    #[error("cannot infer a frequency from consecutive dates {0} and {1}")]
    UnknownFrequency(chrono::NaiveDate, chrono::NaiveDate),
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid simulation setting {name}: {reason}")]
    InvalidConfig { name: &'static str, reason: &'static str },
    #[error("i/o error: {0}")]
    Io(String),
}
