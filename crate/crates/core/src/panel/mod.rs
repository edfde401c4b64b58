//! Synthetic firm panels with planted effects, and cleaning rules for
//! external panels.

mod cleaning;
mod config;
mod io;
mod simulate;

use thiserror::Error;

pub use cleaning::{balance_check, trim_above, winsorize_by_group, BalanceFlag, BalanceRow};
pub use config::{beta_shape, PanelConfig, PanelEffect, ReturnsConfig};
pub use io::{load_panel, load_returns, read_panel, read_returns, save_panel, save_returns, write_panel, write_returns, PANEL_COLUMNS, RETURN_COLUMNS};
pub use simulate::{simulate_panel, simulate_returns, stylized_price_levels, FirmYear, ReturnObs};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PanelError {
    #[error("invalid panel setting {name}: {reason}")]
    InvalidConfig { name: &'static str, reason: String },
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("empty input")]
    Empty,
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("missing required column {0}")]
    MissingColumn(&'static str),
    #[error("line {line}: duplicate key firm {firm_id}, {what} {period}")]
    DuplicateKey { line: usize, firm_id: u64, what: &'static str, period: i32 },
    #[error("values and group ids differ in length ({values} vs {groups})")]
    LengthMismatch { values: usize, groups: usize },
    #[error("i/o error: {0}")]
    Io(String),
}
