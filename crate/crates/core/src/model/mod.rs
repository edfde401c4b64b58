//! Heterogeneous-firm economy with nominal debt, a working-capital
//! constraint and a menu cost of wage adjustment.
//!
//! Firms carry nominal debt `D0` into a period in which the price level is
//! `P`; a firm defaults when its real debt exceeds the value of its capital.
//! Surviving firms borrow against a share `ξ` of output to finance labor,
//! so a higher price level raises labor demand through lower real debt.

mod distribution;
mod equilibrium;
mod firm;
mod params;
mod sweep;

use thiserror::Error;

pub use distribution::{ShockDistribution, ShockFamily};
pub use equilibrium::{EquilibriumPoint, Regime, LAMBDA_TOLERANCE};
pub use firm::{Cutoff, FirmAllocation};
pub use params::{ModelParams, ParamSpec, ShockSpec, WageAnchor, DEFAULT_CONFIG};
pub use sweep::{
    comparative_statics_d0, default_curve, demand_increment, sweep, write_sweep_csv, ComparativeRow, DefaultCurvePoint,
    SweepMode, SweepRow, SWEEP_HEADER,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },
    #[error("price level must be positive, got {0}")]
    NonPositivePrice(f64),
    #[error("real wage must be positive, got {0}")]
    NonPositiveWage(f64),
    #[error("real wage {w} is outside the labor-demand validity region (w > {floor})")]
    OutsideDemandRegion { w: f64, floor: f64 },
    #[error("labor {l} is outside the labor-supply range (0, {l_max})")]
    LaborOutsideSupplyRange { l: f64, l_max: f64 },
    #[error("labor supply is inelastic at {l_max} when household debt wealth is zero")]
    InelasticSupply { l_max: f64 },
    #[error("no equilibrium in validity region at P = {p}")]
    NoEquilibrium { p: f64 },
    #[error("unconstrained firm encountered: multiplier {lambda} at real wage {w} (constraint binds only for w <= {ceiling})")]
    UnconstrainedFirm { lambda: f64, w: f64, ceiling: f64 },
    #[error("no active firms at P = {p}")]
    NoActiveFirms { p: f64 },
    #[error("household consumption must be positive, got {0}")]
    NonPositiveConsumption(f64),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid price grid: {0}")]
    InvalidGrid(String),
}

impl ModelError {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        ModelError::InvalidParameter { name, value, reason }
    }
}
