use std::io::Write;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::absorb::{dense_ids, Absorber};
use super::EconError;

/// Relative residual norm below which a column counts as collinear with
/// the columns before it.
pub const COLLINEARITY_TOL: f64 = 1e-10;

/// Weak-instrument threshold on the first-stage F statistic.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;

/// How the coefficient covariance is estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind {
    /// Liang-Zeger sandwich with factor `(G/(G−1))·((N−1)/(N−K))`.
    Cluster { clusters: Vec<u64> },
    /// Heteroskedasticity-robust with factor `N/(N−K)`.
    Hc1,
}

/// Wald test that a set of coefficients is jointly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WaldTest {
    pub terms: Vec<String>,
    pub f_stat: f64,
    pub df1: usize,
    pub df2: f64,
    pub p_value: f64,
}

/// First-stage strength of one endogenous regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstStage {
    pub endogenous: String,
    /// Robust Wald F on the excluded instruments.
    pub f_stat: f64,
    pub weak: bool,
}

/// Coefficients, covariance and fit statistics of a linear regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    pub n_obs: usize,
    /// Number of clusters; equals `n_obs` under HC1.
    pub n_clusters: usize,
    pub singleton_clusters: usize,
    /// Slopes plus absorbed fixed-effect rank.
    pub n_params: usize,
    /// Degrees of freedom of the t and F reference distributions.
    pub df_resid: f64,
    /// R² of the regression on fixed-effect-residualized data.
    pub r2_within: f64,
    pub residuals: Vec<f64>,
    pub first_stage: Vec<FirstStage>,
    pub joint_test: Option<WaldTest>,
}

fn t_dist(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df.max(1.0)).expect("positive df")
}

impl RegressionResult {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.coefficients[i])
    }

    pub fn se(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }

    pub fn t_stat(&self, i: usize) -> f64 {
        self.coefficients[i] / self.se(i)
    }

    pub fn p_value(&self, i: usize) -> f64 {
        let t = self.t_stat(i);
        if !t.is_finite() {
            return if t.is_nan() { f64::NAN } else { 0.0 };
        }
        2.0 * (1.0 - t_dist(self.df_resid).cdf(t.abs()))
    }

    /// Two-sided confidence interval at `level` (e.g. 0.95).
    pub fn conf_int(&self, i: usize, level: f64) -> (f64, f64) {
        let crit = t_dist(self.df_resid).inverse_cdf(0.5 + level / 2.0);
        let (b, s) = (self.coefficients[i], self.se(i));
        (b - crit * s, b + crit * s)
    }

    /// Joint Wald F test that the named coefficients are zero.
    pub fn wald_test(&self, terms: &[&str]) -> Result<WaldTest, EconError> {
        let idx: Vec<usize> = terms
            .iter()
            .map(|t| self.index(t).ok_or_else(|| EconError::UnknownTerm(t.to_string())))
            .collect::<Result<_, _>>()?;
        let q = idx.len();
        let b = DVector::from_iterator(q, idx.iter().map(|&i| self.coefficients[i]));
        let v = DMatrix::from_fn(q, q, |r, c| self.covariance[(idx[r], idx[c])]);
        let inv = v.clone().try_inverse().ok_or(EconError::Numerical("singular covariance block in Wald test"))?;
        let f_stat = (b.transpose() * inv * &b)[(0, 0)] / q as f64;
        let df2 = self.df_resid.max(1.0);
        let p_value = FisherSnedecor::new(q as f64, df2).map(|d| 1.0 - d.cdf(f_stat)).unwrap_or(f64::NAN);
        Ok(WaldTest { terms: terms.iter().map(|t| t.to_string()).collect(), f_stat, df1: q, df2, p_value })
    }

    /// Writes `term,estimate,se,t,p` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["term", "estimate", "se", "t", "p"])?;
        for i in 0..self.names.len() {
            w.write_record([
                self.names[i].clone(),
                crate::fmt_sig17(self.coefficients[i]),
                crate::fmt_sig17(self.se(i)),
                crate::fmt_sig17(self.t_stat(i)),
                crate::fmt_sig17(self.p_value(i)),
            ])?;
        }
        w.flush()
    }

    /// Writes a nested `key = value` report with fit statistics, the
    /// coefficient table, first-stage strength and any joint test.
    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let f = crate::fmt_sig17;
        writeln!(out, "regression {{")?;
        writeln!(out, "  n_obs = {}", self.n_obs)?;
        writeln!(out, "  n_clusters = {}", self.n_clusters)?;
        writeln!(out, "  singleton_clusters = {}", self.singleton_clusters)?;
        writeln!(out, "  n_params = {}", self.n_params)?;
        writeln!(out, "  df_resid = {}", f(self.df_resid))?;
        writeln!(out, "  r2_within = {}", f(self.r2_within))?;
        writeln!(out, "  coefficients {{")?;
        for i in 0..self.names.len() {
            writeln!(
                out,
                "    {} {{ estimate = {}, se = {}, t = {}, p = {} }}",
                self.names[i],
                f(self.coefficients[i]),
                f(self.se(i)),
                f(self.t_stat(i)),
                f(self.p_value(i))
            )?;
        }
        writeln!(out, "  }}")?;
        if !self.first_stage.is_empty() {
            writeln!(out, "  first_stage {{")?;
            for s in &self.first_stage {
                writeln!(out, "    {} {{ f = {}, weak = {} }}", s.endogenous, f(s.f_stat), s.weak)?;
            }
            writeln!(out, "  }}")?;
        }
        if let Some(t) = &self.joint_test {
            writeln!(
                out,
                "  joint_test {{ terms = [{}], f = {}, df1 = {}, df2 = {}, p = {} }}",
                t.terms.join(", "),
                f(t.f_stat),
                t.df1,
                f(t.df2),
                f(t.p_value)
            )?;
        }
        writeln!(out, "}}")
    }
}

/// Names the columns of `x` that are linear combinations of earlier ones.
pub(crate) fn collinear_columns(x: &DMatrix<f64>) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut bad = Vec::new();
    for j in 0..x.ncols() {
        let col = x.column(j).into_owned();
        let norm = col.norm();
        let mut r = col.clone();
        for _ in 0..2 {
            for q in &basis {
                let d = q.dot(&r);
                r -= q * d;
            }
        }
        let rn = r.norm();
        if norm == 0.0 || rn <= COLLINEARITY_TOL * norm {
            bad.push(j);
        } else {
            basis.push(r / rn);
        }
    }
    bad
}

/// Flags columns that the fixed effects absorb: their residualized norm is
/// negligible relative to the raw column.
pub(crate) fn check_absorbed(raw: &DMatrix<f64>, residualized: &DMatrix<f64>, names: &[String]) -> Result<(), EconError> {
    let bad: Vec<String> = (0..raw.ncols())
        .filter(|&j| residualized.column(j).norm() <= COLLINEARITY_TOL * raw.column(j).norm())
        .map(|j| names[j].clone())
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(EconError::RankDeficient(bad))
    }
}

fn check_rank(x: &DMatrix<f64>, names: &[String]) -> Result<(), EconError> {
    let bad = collinear_columns(x);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(EconError::RankDeficient(bad.into_iter().map(|j| names[j].clone()).collect()))
    }
}

/// `(A'A)^{-1}` and the least-squares solution via a thin QR of `a`.
fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>), EconError> {
    let qr = a.clone().qr();
    let r = qr.r();
    let qty = qr.q().transpose() * y;
    let beta = r.solve_upper_triangular(&qty).ok_or(EconError::Numerical("triangular solve failed"))?;
    let k = a.ncols();
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(EconError::Numerical("triangular inverse failed"))?;
    Ok((beta, &r_inv * r_inv.transpose()))
}

struct Meat {
    matrix: DMatrix<f64>,
    n_groups: usize,
    singletons: usize,
}

/// Sum over groups of outer products of score sums `Σ_i x_i e_i`.
fn meat(scores_x: &DMatrix<f64>, e: &DVector<f64>, kind: &CovarianceKind) -> Meat {
    let k = scores_x.ncols();
    match kind {
        CovarianceKind::Hc1 => {
            let mut m = DMatrix::zeros(k, k);
            for i in 0..scores_x.nrows() {
                let s = scores_x.row(i).transpose() * e[i];
                m += &s * s.transpose();
            }
            Meat { matrix: m, n_groups: scores_x.nrows(), singletons: 0 }
        }
        CovarianceKind::Cluster { clusters } => {
            let (ids, g) = dense_ids(clusters);
            let mut sums = vec![DVector::<f64>::zeros(k); g];
            let mut sizes = vec![0usize; g];
            for i in 0..scores_x.nrows() {
                sums[ids[i]] += scores_x.row(i).transpose() * e[i];
                sizes[ids[i]] += 1;
            }
            let mut m = DMatrix::zeros(k, k);
            for s in &sums {
                m += s * s.transpose();
            }
            Meat { matrix: m, n_groups: g, singletons: sizes.iter().filter(|&&s| s == 1).count() }
        }
    }
}

/// Inputs shared by OLS and 2SLS fits after fixed-effect absorption.
pub(crate) struct Fit<'a> {
    pub y: &'a DVector<f64>,
    pub x: &'a DMatrix<f64>,
    pub names: Vec<String>,
    pub fe_rank: usize,
    pub kind: &'a CovarianceKind,
}

fn finish(
    fit: Fit<'_>,
    beta: DVector<f64>,
    bread: DMatrix<f64>,
    scores_x: &DMatrix<f64>,
) -> Result<RegressionResult, EconError> {
    let n = fit.y.len();
    let k_slopes = fit.x.ncols();
    let k = k_slopes + fit.fe_rank;
    if n <= k {
        return Err(EconError::InsufficientData { needed: k + 1, got: n });
    }
    let e = fit.y - fit.x * &beta;
    let m = meat(scores_x, &e, fit.kind);
    let (factor, df) = match fit.kind {
        CovarianceKind::Hc1 => (n as f64 / (n - k) as f64, (n - k) as f64),
        CovarianceKind::Cluster { .. } => {
            if m.n_groups < 2 {
                return Err(EconError::TooFewClusters(m.n_groups));
            }
            let g = m.n_groups as f64;
            (g / (g - 1.0) * ((n - 1) as f64 / (n - k) as f64), g - 1.0)
        }
    };
    let mut covariance = &bread * m.matrix * &bread * factor;
    covariance = (&covariance + covariance.transpose()) * 0.5;
    let mean_y = fit.y.mean();
    let sst: f64 = fit.y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum();
    let ssr = e.norm_squared();
    Ok(RegressionResult {
        names: fit.names,
        coefficients: beta.iter().copied().collect(),
        covariance,
        n_obs: n,
        n_clusters: m.n_groups,
        singleton_clusters: m.singletons,
        n_params: k,
        df_resid: df,
        r2_within: if sst > 0.0 { 1.0 - ssr / sst } else { f64::NAN },
        residuals: e.iter().copied().collect(),
        first_stage: Vec::new(),
        joint_test: None,
    })
}

pub(crate) fn fit_ols(fit: Fit<'_>) -> Result<RegressionResult, EconError> {
    check_rank(fit.x, &fit.names)?;
    let (beta, bread) = least_squares(fit.x, fit.y)?;
    let x = fit.x;
    finish(fit, beta, bread, x)
}

/// Two-stage least squares with the IV sandwich built from structural
/// residuals and first-stage fitted regressors.
pub(crate) fn fit_iv(fit: Fit<'_>, instruments: &DMatrix<f64>) -> Result<RegressionResult, EconError> {
    check_rank(fit.x, &fit.names)?;
    let inst_names: Vec<String> = (0..instruments.ncols()).map(|j| format!("instrument {j}")).collect();
    check_rank(instruments, &inst_names)?;
    if instruments.ncols() < fit.x.ncols() {
        return Err(EconError::Underidentified { instruments: instruments.ncols(), regressors: fit.x.ncols() });
    }
    let (_, ztz_inv) = least_squares(instruments, &DVector::zeros(instruments.nrows()))?;
    let x_hat = instruments * (&ztz_inv * (instruments.transpose() * fit.x));
    if !collinear_columns(&x_hat).is_empty() {
        return Err(EconError::RankDeficient(
            collinear_columns(&x_hat).into_iter().map(|j| format!("first stage of {}", fit.names[j])).collect(),
        ));
    }
    let (beta, bread) = least_squares(&x_hat, fit.y)?;
    finish(fit, beta, bread, &x_hat)
}

/// OLS of `y` on `x` after absorbing `factors`, with the given covariance.
pub fn ols_absorbed(
    y: &[f64],
    x: &DMatrix<f64>,
    names: &[String],
    factors: &[Vec<u64>],
    kind: &CovarianceKind,
) -> Result<RegressionResult, EconError> {
    validate_dims(y.len(), x, names, kind)?;
    let absorber = Absorber::new(factors, y.len())?;
    let yt = DVector::from_vec(absorber.residualize(y)?);
    let xt = absorber.residualize_matrix(x)?;
    check_absorbed(x, &xt, names)?;
    fit_ols(Fit { y: &yt, x: &xt, names: names.to_vec(), fe_rank: absorber.rank(), kind })
}

pub(crate) fn validate_dims(n: usize, x: &DMatrix<f64>, names: &[String], kind: &CovarianceKind) -> Result<(), EconError> {
    if x.nrows() != n {
        return Err(EconError::DimensionMismatch { what: "design rows", expected: n, got: x.nrows() });
    }
    if names.len() != x.ncols() {
        return Err(EconError::DimensionMismatch { what: "coefficient names", expected: x.ncols(), got: names.len() });
    }
    if let CovarianceKind::Cluster { clusters } = kind {
        if clusters.len() != n {
            return Err(EconError::DimensionMismatch { what: "cluster ids", expected: n, got: clusters.len() });
        }
    }
    if n == 0 {
        return Err(EconError::InsufficientData { needed: 1, got: 0 });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(EconError::Numerical("non-finite regressor"));
    }
    Ok(())
}
