//! Leverage regressions on firm-year panels: difference-in-differences,
//! event studies, debt-inflation shock regressions and long differences.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;

use super::linear::{tsls, within_fe_ols, IvData};
use super::regression::{ols_absorbed, CovarianceKind, RegressionResult};
use super::EconError;
use crate::panel::FirmYear;
use crate::shocks::debt_inflation;

/// A firm-level control variable stored on [`FirmYear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Control {
    Size,
    FixedShare,
    FcfAssets,
    Margin,
    TobinsQ,
    InterestShare,
    ProductionShare,
}

impl Control {
    pub const ALL: [Control; 7] = [
        Control::Size,
        Control::FixedShare,
        Control::FcfAssets,
        Control::Margin,
        Control::TobinsQ,
        Control::InterestShare,
        Control::ProductionShare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Control::Size => "size",
            Control::FixedShare => "fixed_share",
            Control::FcfAssets => "fcf_assets",
            Control::Margin => "margin",
            Control::TobinsQ => "tobins_q",
            Control::InterestShare => "interest_share",
            Control::ProductionShare => "production_share",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == text.trim())
    }

    pub fn value(self, row: &FirmYear) -> Option<f64> {
        match self {
            Control::Size => row.size,
            Control::FixedShare => row.fixed_share,
            Control::FcfAssets => row.fcf_assets,
            Control::Margin => row.margin,
            Control::TobinsQ => row.tobins_q,
            Control::InterestShare => row.interest_share,
            Control::ProductionShare => row.production_share,
        }
        .filter(|v| v.is_finite())
    }
}

/// Which time effects accompany the firm effects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeEffects {
    #[default]
    Year,
    IndustryYear,
}

fn time_label(row: &FirmYear, effects: TimeEffects) -> u64 {
    let year = row.year as u32 as u64;
    match effects {
        TimeEffects::Year => year,
        TimeEffects::IndustryYear => ((row.industry_id as u64) << 32) | year,
    }
}

/// Rows with every requested control present, in input order.
fn complete_rows<'a>(panel: &'a [FirmYear], controls: &[Control]) -> Vec<&'a FirmYear> {
    panel.iter().filter(|r| controls.iter().all(|c| c.value(r).is_some())).collect()
}

struct Design {
    y: Vec<f64>,
    x: DMatrix<f64>,
    names: Vec<String>,
    factors: Vec<Vec<u64>>,
    clusters: Vec<u64>,
}

/// Builds a firm-plus-time fixed-effects design from per-row regressor values.
fn panel_design(
    rows: &[&FirmYear],
    names: Vec<String>,
    effects: TimeEffects,
    regressors: impl Fn(&FirmYear) -> Vec<f64>,
) -> Result<Design, EconError> {
    if rows.is_empty() {
        return Err(EconError::InsufficientData { needed: 1, got: 0 });
    }
    let k = names.len();
    let mut x = DMatrix::zeros(rows.len(), k);
    for (i, r) in rows.iter().enumerate() {
        let v = regressors(r);
        for j in 0..k {
            x[(i, j)] = v[j];
        }
    }
    let firms: Vec<u64> = rows.iter().map(|r| r.firm_id).collect();
    Ok(Design {
        y: rows.iter().map(|r| r.log_employment_x100).collect(),
        x,
        names,
        factors: vec![firms.clone(), rows.iter().map(|r| time_label(r, effects)).collect()],
        clusters: firms,
    })
}

/// Difference-in-differences of log employment on leverage times a
/// post-event indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct DidSpec {
    pub post_year: i32,
    /// Each control enters interacted with the post indicator.
    pub controls: Vec<Control>,
    pub effects: TimeEffects,
}

impl Default for DidSpec {
    fn default() -> Self {
        Self { post_year: 1920, controls: Vec::new(), effects: TimeEffects::Year }
    }
}

/// Name of the leverage-by-post coefficient in [`did`] results.
pub const DID_TERM: &str = "leverage_x_post";

pub fn did(panel: &[FirmYear], spec: &DidSpec) -> Result<RegressionResult, EconError> {
    let rows = complete_rows(panel, &spec.controls);
    let names: Vec<String> = std::iter::once(DID_TERM.to_string())
        .chain(spec.controls.iter().map(|c| format!("{}_x_post", c.name())))
        .collect();
    let d = panel_design(&rows, names, spec.effects, |r| {
        let post = if r.year >= spec.post_year { 1.0 } else { 0.0 };
        std::iter::once(r.leverage_1917 * post)
            .chain(spec.controls.iter().map(|c| c.value(r).expect("complete row") * post))
            .collect()
    })?;
    within_fe_ols(&d.y, &d.x, &d.names, &d.factors, &d.clusters)
}

/// Dynamic difference-in-differences with a base year omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSpec {
    pub base_year: i32,
    /// Each control enters interacted with every non-base year.
    pub controls: Vec<Control>,
    pub effects: TimeEffects,
}

impl Default for EventSpec {
    fn default() -> Self {
        Self { base_year: 1918, controls: Vec::new(), effects: TimeEffects::Year }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventCoefficient {
    pub year: i32,
    pub beta: f64,
    pub se: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStudy {
    pub path: Vec<EventCoefficient>,
    pub regression: RegressionResult,
}

impl EventStudy {
    /// Writes `year,beta,se,ci_lo,ci_hi` with 17 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", "beta", "se", "ci_lo", "ci_hi"])?;
        for c in &self.path {
            w.write_record([
                c.year.to_string(),
                crate::fmt_sig17(c.beta),
                crate::fmt_sig17(c.se),
                crate::fmt_sig17(c.ci_lo),
                crate::fmt_sig17(c.ci_hi),
            ])?;
        }
        w.flush()
    }
}

pub fn event_study(panel: &[FirmYear], spec: &EventSpec) -> Result<EventStudy, EconError> {
    let rows = complete_rows(panel, &spec.controls);
    let years: BTreeSet<i32> = rows.iter().map(|r| r.year).collect();
    if !years.contains(&spec.base_year) {
        return Err(EconError::MissingYear(spec.base_year));
    }
    let event_years: Vec<i32> = years.into_iter().filter(|&y| y != spec.base_year).collect();
    let mut names: Vec<String> = event_years.iter().map(|y| format!("leverage_x_{y}")).collect();
    for c in &spec.controls {
        names.extend(event_years.iter().map(|y| format!("{}_x_{y}", c.name())));
    }
    let d = panel_design(&rows, names, spec.effects, |r| {
        let mut v: Vec<f64> = event_years.iter().map(|&y| if r.year == y { r.leverage_1917 } else { 0.0 }).collect();
        for c in &spec.controls {
            let value = c.value(r).expect("complete row");
            v.extend(event_years.iter().map(|&y| if r.year == y { value } else { 0.0 }));
        }
        v
    })?;
    let regression = within_fe_ols(&d.y, &d.x, &d.names, &d.factors, &d.clusters)?;
    let path = event_years
        .iter()
        .enumerate()
        .map(|(j, &year)| {
            let (ci_lo, ci_hi) = regression.conf_int(j, 0.95);
            EventCoefficient { year, beta: regression.coefficients[j], se: regression.se(j), ci_lo, ci_hi }
        })
        .collect();
    Ok(EventStudy { path, regression })
}

/// Annual price levels keyed by year, used to build debt-inflation shocks.
pub type AnnualLevels = BTreeMap<i32, f64>;

/// Regression of log employment on current and lagged debt-inflation shocks.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockRegressionSpec {
    pub base_year: i32,
    pub lags: usize,
    /// Each control enters interacted with year indicators.
    pub controls: Vec<Control>,
    pub effects: TimeEffects,
}

impl Default for ShockRegressionSpec {
    fn default() -> Self {
        Self { base_year: 1917, lags: 1, controls: Vec::new(), effects: TimeEffects::Year }
    }
}

fn shock_names(lags: usize) -> Vec<String> {
    (0..=lags).map(|l| if l == 0 { "debt_inflation".to_string() } else { format!("debt_inflation_lag{l}") }).collect()
}

fn shock_values(row: &FirmYear, levels: &AnnualLevels, base_year: i32, lags: usize) -> Result<Vec<f64>, EconError> {
    let p0 = *levels.get(&base_year).ok_or(EconError::MissingYear(base_year))?;
    (0..=lags)
        .map(|l| {
            let year = row.year - l as i32;
            let p = *levels.get(&year).ok_or(EconError::MissingYear(year))?;
            debt_inflation(row.leverage_1917, p / p0 - 1.0).map_err(|e| EconError::InvalidInput(e.to_string()))
        })
        .collect()
}

/// Control-by-year interaction columns, omitting the first year.
fn control_year_columns(rows: &[&FirmYear], controls: &[Control]) -> (Vec<String>, Vec<i32>) {
    let years: Vec<i32> = rows.iter().map(|r| r.year).collect::<BTreeSet<_>>().into_iter().skip(1).collect();
    let mut names = Vec::new();
    for c in controls {
        names.extend(years.iter().map(|y| format!("{}_x_{y}", c.name())));
    }
    (names, years)
}

fn control_year_values(row: &FirmYear, controls: &[Control], years: &[i32]) -> Vec<f64> {
    let mut v = Vec::new();
    for c in controls {
        let value = c.value(row).expect("complete row");
        v.extend(years.iter().map(|&y| if row.year == y { value } else { 0.0 }));
    }
    v
}

/// OLS of log employment on `DI_t, …, DI_{t−lags}` with firm and time
/// effects, reporting a joint Wald test of the shock coefficients.
pub fn debt_inflation_regression(
    panel: &[FirmYear],
    levels: &AnnualLevels,
    spec: &ShockRegressionSpec,
) -> Result<RegressionResult, EconError> {
    let rows = complete_rows(panel, &spec.controls);
    for r in &rows {
        shock_values(r, levels, spec.base_year, spec.lags)?;
    }
    let (control_names, years) = control_year_columns(&rows, &spec.controls);
    let terms = shock_names(spec.lags);
    let names: Vec<String> = terms.iter().cloned().chain(control_names).collect();
    let d = panel_design(&rows, names, spec.effects, |r| {
        let mut v = shock_values(r, levels, spec.base_year, spec.lags).expect("checked above");
        v.extend(control_year_values(r, &spec.controls, &years));
        v
    })?;
    let mut result = within_fe_ols(&d.y, &d.x, &d.names, &d.factors, &d.clusters)?;
    let term_refs: Vec<&str> = terms.iter().map(String::as_str).collect();
    result.joint_test = Some(result.wald_test(&term_refs)?);
    Ok(result)
}

/// Name of the real-leverage coefficient in [`debt_inflation_iv`] results.
pub const REAL_LEVERAGE_TERM: &str = "real_leverage";

/// 2SLS of log employment on real leverage `leverage/(1 + π_t)`,
/// instrumented by `DI_t, …, DI_{t−lags}`, with firm and time effects.
pub fn debt_inflation_iv(
    panel: &[FirmYear],
    levels: &AnnualLevels,
    spec: &ShockRegressionSpec,
) -> Result<RegressionResult, EconError> {
    let rows = complete_rows(panel, &spec.controls);
    if rows.is_empty() {
        return Err(EconError::InsufficientData { needed: 1, got: 0 });
    }
    let p0 = *levels.get(&spec.base_year).ok_or(EconError::MissingYear(spec.base_year))?;
    let n = rows.len();
    let mut endog = DMatrix::zeros(n, 1);
    let mut inst = DMatrix::zeros(n, spec.lags + 1);
    let (control_names, years) = control_year_columns(&rows, &spec.controls);
    let mut exog = DMatrix::zeros(n, control_names.len());
    for (i, r) in rows.iter().enumerate() {
        let p = *levels.get(&r.year).ok_or(EconError::MissingYear(r.year))?;
        endog[(i, 0)] = r.leverage_1917 * p0 / p;
        for (j, v) in shock_values(r, levels, spec.base_year, spec.lags)?.into_iter().enumerate() {
            inst[(i, j)] = v;
        }
        for (j, v) in control_year_values(r, &spec.controls, &years).into_iter().enumerate() {
            exog[(i, j)] = v;
        }
    }
    let firms: Vec<u64> = rows.iter().map(|r| r.firm_id).collect();
    let factors = vec![firms.clone(), rows.iter().map(|r| time_label(r, spec.effects)).collect()];
    let y: Vec<f64> = rows.iter().map(|r| r.log_employment_x100).collect();
    tsls(&IvData {
        y: &y,
        endogenous: &endog,
        endogenous_names: &[REAL_LEVERAGE_TERM.to_string()],
        instruments: &inst,
        exogenous: &exog,
        exogenous_names: &control_names,
        factors: &factors,
        covariance: &CovarianceKind::Cluster { clusters: firms },
    })
}

/// Cross-sectional regression of the change in log employment between two
/// years on leverage.
#[derive(Debug, Clone, PartialEq)]
pub struct LongDiffSpec {
    pub from: i32,
    pub to: i32,
    /// Controls measured in the `from` year.
    pub controls: Vec<Control>,
    /// Adds the change from this year to `from` as a lagged outcome.
    pub lagged_from: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LongDifference {
    pub regression: RegressionResult,
    /// Firms dropped for lacking an endpoint or a control.
    pub dropped_firms: usize,
}

/// Name of the leverage coefficient in [`long_difference`] results.
pub const LONG_DIFF_TERM: &str = "leverage";

pub fn long_difference(panel: &[FirmYear], spec: &LongDiffSpec) -> Result<LongDifference, EconError> {
    let mut by_firm: BTreeMap<u64, BTreeMap<i32, &FirmYear>> = BTreeMap::new();
    for r in panel {
        by_firm.entry(r.firm_id).or_default().insert(r.year, r);
    }
    let mut names = vec!["intercept".to_string(), LONG_DIFF_TERM.to_string()];
    names.extend(spec.controls.iter().map(|c| c.name().to_string()));
    if spec.lagged_from.is_some() {
        names.push("lagged_change".to_string());
    }
    let mut y = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for years in by_firm.values() {
        let (Some(start), Some(end)) = (years.get(&spec.from), years.get(&spec.to)) else {
            dropped += 1;
            continue;
        };
        let controls: Option<Vec<f64>> = spec.controls.iter().map(|c| c.value(start)).collect();
        let lag = match spec.lagged_from {
            Some(l) => years.get(&l).map(|r| Some(start.log_employment_x100 - r.log_employment_x100)),
            None => Some(None),
        };
        let (Some(controls), Some(lag)) = (controls, lag) else {
            dropped += 1;
            continue;
        };
        let mut v = vec![1.0, start.leverage_1917];
        v.extend(controls);
        v.extend(lag);
        y.push(end.log_employment_x100 - start.log_employment_x100);
        rows.push(v);
    }
    if rows.is_empty() {
        return Err(EconError::MissingYear(if by_firm.is_empty() { spec.from } else { spec.to }));
    }
    let x = DMatrix::from_fn(rows.len(), names.len(), |i, j| rows[i][j]);
    let regression = ols_absorbed(&y, &x, &names, &[], &CovarianceKind::Hc1)?;
    Ok(LongDifference { regression, dropped_firms: dropped })
}
