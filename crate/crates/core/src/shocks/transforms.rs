use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};

use super::{DatedValue, PricePath, ShockError};
use crate::numerics::{mean, percentile_nearest_rank};

/// Fall in real debt relative to initial assets after cumulative inflation
/// `pi`: `leverage · pi / (1 + pi)`.
pub fn debt_inflation(leverage: f64, pi: f64) -> Result<f64, ShockError> {
    if !(0.0..=1.0).contains(&leverage) {
        return Err(ShockError::InvalidLeverage(leverage));
    }
    if !(pi > -1.0) {
        return Err(ShockError::InflationBelowMinusOne(pi));
    }
    if pi.is_infinite() {
        return Ok(leverage);
    }
    Ok(leverage * pi / (1.0 + pi))
}

/// A firm's base-year balance sheet in nominal units.
#[derive(Debug, Clone, PartialEq)]
pub struct LeverageBase {
    pub firm_id: String,
    /// Nominal liabilities.
    pub liabilities: f64,
    /// Book equity.
    pub equity: f64,
    pub base_year: i32,
}

impl LeverageBase {
    pub fn leverage(&self) -> Result<f64, ShockError> {
        let bad = |reason| ShockError::InvalidBalanceSheet { firm_id: self.firm_id.clone(), reason };
        if !(self.liabilities >= 0.0) || !self.liabilities.is_finite() {
            return Err(bad("liabilities must be nonnegative"));
        }
        let assets = self.liabilities + self.equity;
        if !(assets > 0.0) || !assets.is_finite() {
            return Err(bad("liabilities plus equity must be positive"));
        }
        let lev = self.liabilities / assets;
        if lev > 1.0 {
            return Err(bad("leverage exceeds one"));
        }
        Ok(lev)
    }
}

/// Base-year price level: the last observation dated in `year`.
fn base_level(prices: &PricePath, year: i32) -> Result<f64, ShockError> {
    prices
        .dates()
        .iter()
        .zip(prices.levels())
        .filter(|(d, _)| d.year() == year)
        .map(|(_, &l)| l)
        .next_back()
        .ok_or(ShockError::BaseYearMissing(year))
}

/// Debt-inflation shock at every date of `prices`, with cumulative
/// inflation measured from the last observation of the base year.
pub fn debt_inflation_series(base: &LeverageBase, prices: &PricePath) -> Result<Vec<DatedValue>, ShockError> {
    let lev = base.leverage()?;
    let p0 = base_level(prices, base.base_year)?;
    prices
        .dates()
        .iter()
        .zip(prices.levels())
        .map(|(&date, &level)| Ok(DatedValue { date, value: debt_inflation(lev, level / p0 - 1.0)? }))
        .collect()
}

/// Last observed level in each calendar year of `prices`.
pub fn year_end_levels(prices: &PricePath) -> BTreeMap<i32, f64> {
    prices.dates().iter().zip(prices.levels()).map(|(d, &l)| (d.year(), l)).collect()
}

/// Cross-sectional moments of the debt-inflation shock on one date.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionPoint {
    pub date: NaiveDate,
    pub mean: f64,
    /// Nearest-rank 10th percentile.
    pub p10: f64,
    /// Nearest-rank 90th percentile.
    pub p90: f64,
}

pub fn cross_section_summary(firms: &[LeverageBase], prices: &PricePath) -> Result<Vec<CrossSectionPoint>, ShockError> {
    if firms.is_empty() {
        return Err(ShockError::InsufficientObservations { needed: 1, got: 0 });
    }
    let series: Vec<Vec<DatedValue>> =
        firms.iter().map(|f| debt_inflation_series(f, prices)).collect::<Result<_, _>>()?;
    Ok((0..prices.len())
        .map(|t| {
            let values: Vec<f64> = series.iter().map(|s| s[t].value).collect();
            CrossSectionPoint {
                date: prices.dates()[t],
                mean: mean(&values),
                p10: percentile_nearest_rank(&values, 0.10).expect("nonempty"),
                p90: percentile_nearest_rank(&values, 0.90).expect("nonempty"),
            }
        })
        .collect())
}

/// Annualized premium `12·(F − S)/S` of a one-month forward rate.
pub fn forward_premium(forward: f64, spot: f64) -> Result<f64, ShockError> {
    if !(forward > 0.0) {
        return Err(ShockError::NonPositive { name: "forward rate", value: forward });
    }
    if !(spot > 0.0) {
        return Err(ShockError::NonPositive { name: "spot rate", value: spot });
    }
    Ok(12.0 * (forward - spot) / spot)
}

/// `100·(ln P_t − ln P_{t−h})`, dated at `t`.
pub fn log_inflation(prices: &PricePath, horizon: usize) -> Result<Vec<DatedValue>, ShockError> {
    if horizon == 0 || prices.len() < horizon + 1 {
        return Err(ShockError::InsufficientObservations { needed: horizon.max(1) + 1, got: prices.len() });
    }
    let levels = prices.levels();
    Ok((horizon..prices.len())
        .map(|t| DatedValue { date: prices.dates()[t], value: 100.0 * (levels[t].ln() - levels[t - horizon].ln()) })
        .collect())
}

/// Real total log return times 100 from a nominal price, a dividend and a deflator.
pub fn real_total_log_return(
    price: f64,
    dividend: f64,
    prev_price: f64,
    deflator: f64,
    prev_deflator: f64,
) -> Result<f64, ShockError> {
    for (name, value) in [("price", price), ("previous price", prev_price), ("deflator", deflator), ("previous deflator", prev_deflator)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ShockError::NonPositive { name, value });
        }
    }
    if !(dividend >= 0.0 && dividend.is_finite()) {
        return Err(ShockError::NonPositive { name: "dividend", value: dividend });
    }
    Ok(100.0 * ((price / deflator + dividend / deflator) / (prev_price / prev_deflator)).ln())
}

/// Calendar days since the level last rose strictly, for every date on or
/// after the first increase. Decreases and unchanged levels extend the count.
pub fn duration_since_last_increase(series: &PricePath) -> Result<Vec<DatedValue>, ShockError> {
    if series.len() < 2 {
        return Err(ShockError::InsufficientObservations { needed: 2, got: series.len() });
    }
    let (dates, levels) = (series.dates(), series.levels());
    let mut last: Option<NaiveDate> = None;
    let mut out = Vec::new();
    for t in 1..series.len() {
        if levels[t] > levels[t - 1] {
            last = Some(dates[t]);
        }
        if let Some(since) = last {
            out.push(DatedValue { date: dates[t], value: (dates[t] - since).num_days() as f64 });
        }
    }
    Ok(out)
}
