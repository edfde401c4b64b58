//! Numerical laboratory for the debt-inflation channel.
//!
//! The crate is split into four areas:
//!
//! * [`model`] solves a static heterogeneous-firm economy in which firms owe
//!   nominal debt, face a working-capital constraint and may default, under
//!   flexible wages or a menu cost of wage adjustment.
//! * [`shocks`] holds price-level analytics: the cumulative debt-inflation
//!   shock, forward premia, log inflation, deflated returns and
//!   adjustment-duration series.
//! * [`panel`] generates synthetic firm panels with planted effects and
//!   cleans external panels.
//! * [`econometrics`] implements fixed-effects regressions with
//!   firm-clustered errors, event studies, 2SLS, long differences,
//!   Fama-MacBeth regressions, portfolio sorts and binned means.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod econometrics;
pub mod model;
pub mod numerics;
pub mod panel;
pub mod shocks;

/// Formats a float with 17 significant digits, the precision used by
/// every fixed-format CSV writer in the crate.
pub fn fmt_sig17(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}
