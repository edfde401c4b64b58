use std::io::Write;

use rayon::prelude::*;

use super::{EquilibriumPoint, ModelError, ModelParams};
use crate::fmt_sig17;

pub const SWEEP_HEADER: [&str; 11] = [
    "P",
    "W",
    "w",
    "L",
    "Y",
    "Zstar",
    "default_share",
    "regime",
    "utility_adjust",
    "utility_stay",
    "resource_residual",
];

/// Which solver a sweep runs at each price level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepMode {
    Flexible,
    #[default]
    MenuCost,
}

/// One grid point of a sweep; failures are kept in place.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub price_level: f64,
    pub outcome: Result<EquilibriumPoint, ModelError>,
}

fn validate_grid(grid: &[f64]) -> Result<(), ModelError> {
    if grid.is_empty() {
        return Err(ModelError::InvalidGrid("grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(ModelError::InvalidGrid(format!("price level {bad} is not positive")));
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(ModelError::InvalidGrid(format!("grid not strictly increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Solves the economy at every price level of a strictly increasing grid.
///
/// Points are solved in parallel; rows come back in grid order.
pub fn sweep(grid: &[f64], params: &ModelParams, mode: SweepMode) -> Result<Vec<SweepRow>, ModelError> {
    validate_grid(grid)?;
    Ok(grid
        .par_iter()
        .map(|&p| SweepRow {
            price_level: p,
            outcome: match mode {
                SweepMode::Flexible => params.flexible_equilibrium(p),
                SweepMode::MenuCost => params.menu_cost_equilibrium(p),
            },
        })
        .collect())
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_sig17).unwrap_or_default()
}

/// Writes sweep rows as CSV with 17 significant digits. Failed rows keep
/// their price level, carry `error` in the regime column and leave the
/// other fields empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> std::io::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(SWEEP_HEADER)?;
    for row in rows {
        let record: Vec<String> = match &row.outcome {
            Ok(eq) => vec![
                fmt_sig17(eq.price_level),
                fmt_sig17(eq.nominal_wage),
                fmt_sig17(eq.real_wage),
                fmt_sig17(eq.labor),
                fmt_sig17(eq.output),
                fmt_sig17(eq.zstar),
                fmt_sig17(eq.default_share),
                eq.regime.as_str().to_string(),
                opt(eq.utility_adjust),
                opt(eq.utility_stay),
                fmt_sig17(eq.resource_residual),
            ],
            Err(_) => {
                let mut r = vec![String::new(); SWEEP_HEADER.len()];
                r[0] = fmt_sig17(row.price_level);
                r[7] = "error".to_string();
                r
            }
        };
        writer.write_record(&record)?;
    }
    writer.flush()
}

/// Change in aggregate labor demand from `P` to `P + h` at a fixed real wage.
pub fn demand_increment(params: &ModelParams, p: f64, w: f64, h: f64) -> Result<f64, ModelError> {
    Ok(params.aggregate_labor_demand(w, p + h)? - params.aggregate_labor_demand(w, p)?)
}

/// Labor demand at a fixed real wage and equilibrium labor for one `(P, D0)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeRow {
    pub price_level: f64,
    pub d0: f64,
    pub fixed_wage: f64,
    pub demand: f64,
    /// `L^d(P + h) − L^d(P)` at `fixed_wage`, with `h = 1e-4·P`.
    pub demand_increment: f64,
    pub equilibrium: Result<EquilibriumPoint, ModelError>,
}

/// Relative step used for the fixed-wage demand increment.
pub const INCREMENT_STEP: f64 = 1e-4;

/// Evaluates labor demand at the fixed real wage `w` and the flexible
/// equilibrium for every `(P, D0)` pair, keeping the order of both lists.
pub fn comparative_statics_d0(
    grid: &[f64],
    d0_list: &[f64],
    params: &ModelParams,
    w: f64,
) -> Result<Vec<ComparativeRow>, ModelError> {
    validate_grid(grid)?;
    let economies: Vec<ModelParams> = d0_list.iter().map(|&d0| params.with_d0(d0)).collect::<Result<_, _>>()?;
    let pairs: Vec<(f64, usize)> = grid.iter().flat_map(|&p| (0..economies.len()).map(move |j| (p, j))).collect();
    pairs
        .par_iter()
        .map(|&(p, j)| {
            let economy = &economies[j];
            Ok(ComparativeRow {
                price_level: p,
                d0: economy.d0(),
                fixed_wage: w,
                demand: economy.aggregate_labor_demand(w, p)?,
                demand_increment: demand_increment(economy, p, w, INCREMENT_STEP * p)?,
                equilibrium: economy.flexible_equilibrium(p),
            })
        })
        .collect()
}

/// Default share against log inflation `100·ln P` relative to `P = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DefaultCurvePoint {
    pub price_level: f64,
    pub log_inflation: f64,
    pub default_share: f64,
}

pub fn default_curve(grid: &[f64], params: &ModelParams) -> Result<Vec<DefaultCurvePoint>, ModelError> {
    validate_grid(grid)?;
    grid.iter()
        .map(|&p| {
            Ok(DefaultCurvePoint { price_level: p, log_inflation: 100.0 * p.ln(), default_share: params.default_share(p)? })
        })
        .collect()
}
