//! Fixed-effects panel regressions, instrumental variables and
//! cross-sectional asset-pricing estimators.

mod absorb;
mod cross_section;
mod linear;
mod panel_models;
mod regression;

use thiserror::Error;

pub use absorb::{Absorber, ALTERNATING_THRESHOLD, ALTERNATING_TOL};
pub use cross_section::{
    binned_means, fama_macbeth, fama_macbeth_returns, market_betas, portfolio_sort, Bin, BucketStats, FamaMacBeth,
    PortfolioResult, SortObs,
};
pub use linear::{tsls, within_fe_ols, IvData};
pub use panel_models::{
    debt_inflation_iv, debt_inflation_regression, did, event_study, long_difference, AnnualLevels, Control,
    DidSpec, EventCoefficient, EventSpec, EventStudy, LongDiffSpec, LongDifference, ShockRegressionSpec,
    TimeEffects, DID_TERM, LONG_DIFF_TERM, REAL_LEVERAGE_TERM,
};
pub use regression::{
    ols_absorbed, CovarianceKind, FirstStage, RegressionResult, WaldTest, COLLINEARITY_TOL, WEAK_INSTRUMENT_F,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconError {
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("{what}: expected {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("numerical failure: {0}")]
    Numerical(&'static str),
    #[error("unknown term `{0}`")]
    UnknownTerm(String),
    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("{instruments} excluded instruments for {regressors} endogenous regressors")]
    Underidentified { instruments: usize, regressors: usize },
    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("clustered standard errors need at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("period {period} has {firms} firms for {buckets} buckets")]
    TooFewFirms { period: i32, firms: usize, buckets: usize },
    #[error("no price level for year {0}")]
    MissingYear(i32),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
