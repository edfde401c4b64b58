//! Cross-sectional asset-pricing tools: Fama-MacBeth regressions,
//! characteristic-sorted portfolios and binned means.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};

use super::absorb::Absorber;
use super::regression::collinear_columns;
use super::EconError;
use crate::numerics::{mean, sample_sd};
use crate::panel::ReturnObs;

/// Time-series averages of per-period cross-sectional OLS coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct FamaMacBeth {
    /// `intercept` followed by the characteristic names.
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// Time-series sd of the per-period coefficients over `√T`.
    pub se: Vec<f64>,
    pub periods_used: usize,
    /// Periods whose cross-section was too small or rank-deficient.
    pub periods_skipped: Vec<i32>,
    /// Per-period coefficients in period order.
    pub per_period: Vec<(i32, Vec<f64>)>,
}

impl FamaMacBeth {
    pub fn t_stat(&self, i: usize) -> f64 {
        self.coefficients[i] / self.se[i]
    }

    /// Writes `term,estimate,se,t,p` with the t reference on `T − 1` degrees of freedom.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        use statrs::distribution::{ContinuousCDF, StudentsT};
        let df = (self.periods_used.max(2) - 1) as f64;
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "estimate", "se", "t", "p"])?;
        for i in 0..self.names.len() {
            let t = self.t_stat(i);
            let p = if t.is_finite() { 2.0 * (1.0 - dist.cdf(t.abs())) } else if t.is_nan() { f64::NAN } else { 0.0 };
            w.write_record([
                self.names[i].clone(),
                crate::fmt_sig17(self.coefficients[i]),
                crate::fmt_sig17(self.se[i]),
                crate::fmt_sig17(t),
                crate::fmt_sig17(p),
            ])?;
        }
        w.flush()
    }
}

/// Fama-MacBeth regression of `y` on the columns of `x` plus an intercept.
///
/// Rows are grouped by `periods`; each period is fit by OLS and periods
/// with no more observations than coefficients, or with collinear
/// characteristics, are skipped and listed.
pub fn fama_macbeth(periods: &[i32], y: &[f64], x: &DMatrix<f64>, names: &[String]) -> Result<FamaMacBeth, EconError> {
    let n = y.len();
    if periods.len() != n || x.nrows() != n {
        return Err(EconError::DimensionMismatch { what: "cross-section rows", expected: n, got: x.nrows().min(periods.len()) });
    }
    if names.len() != x.ncols() {
        return Err(EconError::DimensionMismatch { what: "characteristic names", expected: x.ncols(), got: names.len() });
    }
    let mut groups: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, &p) in periods.iter().enumerate() {
        groups.entry(p).or_default().push(i);
    }
    let k = x.ncols() + 1;
    let mut per_period = Vec::new();
    let mut skipped = Vec::new();
    for (&period, rows) in &groups {
        let design = DMatrix::from_fn(rows.len(), k, |r, c| if c == 0 { 1.0 } else { x[(rows[r], c - 1)] });
        if rows.len() <= k || !collinear_columns(&design).is_empty() {
            skipped.push(period);
            continue;
        }
        let yv = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
        let qr = design.qr();
        let b = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * yv))
            .ok_or(EconError::Numerical("cross-sectional solve failed"))?;
        per_period.push((period, b.iter().copied().collect::<Vec<f64>>()));
    }
    let t = per_period.len();
    if t < 2 {
        return Err(EconError::InsufficientData { needed: 2, got: t });
    }
    let mut coefficients = Vec::with_capacity(k);
    let mut se = Vec::with_capacity(k);
    for j in 0..k {
        let series: Vec<f64> = per_period.iter().map(|(_, b)| b[j]).collect();
        coefficients.push(mean(&series));
        se.push(sample_sd(&series) / (t as f64).sqrt());
    }
    Ok(FamaMacBeth {
        names: std::iter::once("intercept".to_string()).chain(names.iter().cloned()).collect(),
        coefficients,
        se,
        periods_used: t,
        periods_skipped: skipped,
        per_period,
    })
}

/// Full-sample slope of each firm's return on the market return.
pub fn market_betas(returns: &[ReturnObs]) -> HashMap<u64, f64> {
    let mut by_firm: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for r in returns {
        by_firm.entry(r.firm_id).or_default().push((r.market_return, r.ret));
    }
    by_firm
        .into_iter()
        .map(|(firm, obs)| {
            let mx = obs.iter().map(|o| o.0).sum::<f64>() / obs.len() as f64;
            let my = obs.iter().map(|o| o.1).sum::<f64>() / obs.len() as f64;
            let sxy: f64 = obs.iter().map(|o| (o.0 - mx) * (o.1 - my)).sum();
            let sxx: f64 = obs.iter().map(|o| (o.0 - mx) * (o.0 - mx)).sum();
            (firm, if sxx > 0.0 { sxy / sxx } else { 0.0 })
        })
        .collect()
}

/// Fama-MacBeth of returns on lagged leverage, optionally adding each
/// firm's full-sample market beta as a second characteristic.
pub fn fama_macbeth_returns(returns: &[ReturnObs], with_market_beta: bool) -> Result<FamaMacBeth, EconError> {
    let betas = if with_market_beta { market_betas(returns) } else { HashMap::new() };
    let mut names = vec!["leverage_lag".to_string()];
    if with_market_beta {
        names.push("market_beta".to_string());
    }
    let x = DMatrix::from_fn(returns.len(), names.len(), |i, j| {
        if j == 0 { returns[i].leverage_lag } else { betas[&returns[i].firm_id] }
    });
    let periods: Vec<i32> = returns.iter().map(|r| r.period).collect();
    let y: Vec<f64> = returns.iter().map(|r| r.ret).collect();
    fama_macbeth(&periods, &y, &x, &names)
}

/// One observation for a characteristic sort.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortObs {
    pub period: i32,
    pub firm_id: u64,
    /// Characteristic known before the return period.
    pub characteristic: f64,
    pub ret: f64,
}

impl From<&ReturnObs> for SortObs {
    fn from(r: &ReturnObs) -> Self {
        Self { period: r.period, firm_id: r.firm_id, characteristic: r.leverage_lag, ret: r.ret }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BucketStats {
    /// 1 is the lowest characteristic bucket.
    pub bucket: usize,
    pub mean_characteristic: f64,
    pub mean_return: f64,
    /// Time-series sd of the period means over `√T`.
    pub se_return: f64,
    pub n_obs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioResult {
    pub buckets: Vec<BucketStats>,
    /// Mean of the per-period top-minus-bottom spread.
    pub hml_mean: f64,
    pub hml_se: f64,
    pub n_periods: usize,
    /// Per-period bucket means, in period order.
    pub period_means: Vec<(i32, Vec<f64>)>,
}

impl PortfolioResult {
    /// Writes `portfolio,mean_characteristic,mean_return,se,n_obs`; the last
    /// row is the high-minus-low spread.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["portfolio", "mean_characteristic", "mean_return", "se", "n_obs"])?;
        for b in &self.buckets {
            w.write_record([
                b.bucket.to_string(),
                crate::fmt_sig17(b.mean_characteristic),
                crate::fmt_sig17(b.mean_return),
                crate::fmt_sig17(b.se_return),
                b.n_obs.to_string(),
            ])?;
        }
        let top = self.buckets.last().map(|b| b.mean_characteristic).unwrap_or(f64::NAN);
        let bottom = self.buckets.first().map(|b| b.mean_characteristic).unwrap_or(f64::NAN);
        w.write_record([
            "HML".to_string(),
            crate::fmt_sig17(top - bottom),
            crate::fmt_sig17(self.hml_mean),
            crate::fmt_sig17(self.hml_se),
            self.n_periods.to_string(),
        ])?;
        w.flush()
    }
}

/// Sorts firms into `k` equal-count buckets each period by characteristic
/// (ties broken by firm id, the lower id going to the lower position) and
/// averages equal-weighted bucket returns over periods.
pub fn portfolio_sort(obs: &[SortObs], k: usize) -> Result<PortfolioResult, EconError> {
    if k < 2 {
        return Err(EconError::InvalidInput("need at least two buckets".into()));
    }
    let mut groups: BTreeMap<i32, Vec<&SortObs>> = BTreeMap::new();
    for o in obs {
        if !(o.characteristic.is_finite() && o.ret.is_finite()) {
            return Err(EconError::InvalidInput(format!("non-finite value for firm {} in period {}", o.firm_id, o.period)));
        }
        groups.entry(o.period).or_default().push(o);
    }
    if groups.is_empty() {
        return Err(EconError::InsufficientData { needed: 1, got: 0 });
    }
    let mut char_means: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut ret_means: Vec<Vec<f64>> = vec![Vec::new(); k];
    let mut counts = vec![0usize; k];
    let mut period_means = Vec::new();
    for (&period, members) in groups.iter_mut() {
        let n = members.len();
        if n < k {
            return Err(EconError::TooFewFirms { period, firms: n, buckets: k });
        }
        members.sort_by(|a, b| a.characteristic.total_cmp(&b.characteristic).then(a.firm_id.cmp(&b.firm_id)));
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (pos, o) in members.iter().enumerate() {
            let b = (pos + 1) * k;
            let bucket = b.div_ceil(n) - 1;
            sums[bucket].0 += o.characteristic;
            sums[bucket].1 += o.ret;
            sums[bucket].2 += 1;
        }
        let mut means = Vec::with_capacity(k);
        for (j, (c, r, m)) in sums.into_iter().enumerate() {
            char_means[j].push(c / m as f64);
            ret_means[j].push(r / m as f64);
            counts[j] += m;
            means.push(r / m as f64);
        }
        period_means.push((period, means));
    }
    let t = period_means.len();
    let hml: Vec<f64> = (0..t).map(|i| ret_means[k - 1][i] - ret_means[0][i]).collect();
    let root_t = (t as f64).sqrt();
    Ok(PortfolioResult {
        buckets: (0..k)
            .map(|j| BucketStats {
                bucket: j + 1,
                mean_characteristic: mean(&char_means[j]),
                mean_return: mean(&ret_means[j]),
                se_return: sample_sd(&ret_means[j]) / root_t,
                n_obs: counts[j],
            })
            .collect(),
        hml_mean: mean(&hml),
        hml_se: sample_sd(&hml) / root_t,
        n_periods: t,
        period_means,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub bin: usize,
    pub n: usize,
    pub mean_x: f64,
    pub mean_y: f64,
}

/// Equal-count bin means of `y` against `x` after residualizing both on
/// `controls` (with an intercept) and the fixed effects in `factors`;
/// sample means are added back so bins stay on the original scale.
pub fn binned_means(
    x: &[f64],
    y: &[f64],
    n_bins: usize,
    controls: Option<&DMatrix<f64>>,
    factors: &[Vec<u64>],
) -> Result<Vec<Bin>, EconError> {
    let n = x.len();
    if y.len() != n {
        return Err(EconError::DimensionMismatch { what: "y values", expected: n, got: y.len() });
    }
    if n_bins == 0 || n < n_bins {
        return Err(EconError::InsufficientData { needed: n_bins.max(1), got: n });
    }
    let (xr, yr) = if controls.is_some() || !factors.is_empty() {
        let absorber = Absorber::new(factors, n)?;
        let partial = |v: &[f64]| -> Result<Vec<f64>, EconError> {
            let mut r = DVector::from_vec(absorber.residualize(v)?);
            if let Some(c) = controls {
                if c.nrows() != n {
                    return Err(EconError::DimensionMismatch { what: "control rows", expected: n, got: c.nrows() });
                }
                let mut w = absorber.residualize_matrix(c)?;
                if factors.is_empty() {
                    w = w.insert_column(0, 1.0);
                }
                let qr = w.clone().qr();
                let fitted = qr.q() * (qr.q().transpose() * &r);
                r -= fitted;
            } else if factors.is_empty() {
                let m = r.mean();
                r.add_scalar_mut(-m);
            }
            let m = mean(v);
            Ok(r.iter().map(|e| e + m).collect())
        };
        (partial(x)?, partial(y)?)
    } else {
        (x.to_vec(), y.to_vec())
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xr[a].total_cmp(&xr[b]).then(a.cmp(&b)));
    let mut sums = vec![(0usize, 0.0, 0.0); n_bins];
    for (pos, &i) in order.iter().enumerate() {
        let b = ((pos + 1) * n_bins).div_ceil(n) - 1;
        sums[b].0 += 1;
        sums[b].1 += xr[i];
        sums[b].2 += yr[i];
    }
    Ok(sums
        .into_iter()
        .enumerate()
        .map(|(j, (m, sx, sy))| Bin { bin: j + 1, n: m, mean_x: sx / m as f64, mean_y: sy / m as f64 })
        .collect())
}
