//! Fixed-effects OLS and 2SLS on generic design matrices.

use nalgebra::DMatrix;

use super::absorb::Absorber;
use super::regression::{check_absorbed, fit_iv, fit_ols, validate_dims, CovarianceKind, Fit, FirstStage, RegressionResult, WEAK_INSTRUMENT_F};
use super::EconError;
use nalgebra::DVector;

/// OLS of `y` on `x` with the fixed effects in `factors` absorbed and
/// firm-clustered covariance.
///
/// Coefficients equal those of OLS with one dummy per fixed-effect level.
pub fn within_fe_ols(
    y: &[f64],
    x: &DMatrix<f64>,
    names: &[String],
    factors: &[Vec<u64>],
    clusters: &[u64],
) -> Result<RegressionResult, EconError> {
    super::regression::ols_absorbed(y, x, names, factors, &CovarianceKind::Cluster { clusters: clusters.to_vec() })
}

/// Data for a two-stage least squares fit.
#[derive(Debug, Clone)]
pub struct IvData<'a> {
    pub y: &'a [f64],
    pub endogenous: &'a DMatrix<f64>,
    pub endogenous_names: &'a [String],
    /// Excluded instruments.
    pub instruments: &'a DMatrix<f64>,
    /// Included exogenous regressors; may have zero columns.
    pub exogenous: &'a DMatrix<f64>,
    pub exogenous_names: &'a [String],
    pub factors: &'a [Vec<u64>],
    pub covariance: &'a CovarianceKind,
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Two-stage least squares with fixed effects absorbed from every variable.
///
/// The covariance is the IV sandwich on structural residuals. Each
/// endogenous regressor gets a first-stage robust Wald F on the excluded
/// instruments, flagged weak below 10.
pub fn tsls(data: &IvData<'_>) -> Result<RegressionResult, EconError> {
    let n = data.y.len();
    let names: Vec<String> = data.endogenous_names.iter().chain(data.exogenous_names).cloned().collect();
    let x = hstack(data.endogenous, data.exogenous);
    validate_dims(n, &x, &names, data.covariance)?;
    if data.instruments.nrows() != n || data.exogenous.nrows() != n {
        return Err(EconError::DimensionMismatch { what: "instrument rows", expected: n, got: data.instruments.nrows() });
    }
    if data.instruments.ncols() < data.endogenous.ncols() {
        return Err(EconError::Underidentified {
            instruments: data.instruments.ncols(),
            regressors: data.endogenous.ncols(),
        });
    }
    let absorber = Absorber::new(data.factors, n)?;
    let yt = DVector::from_vec(absorber.residualize(data.y)?);
    let xt = absorber.residualize_matrix(&x)?;
    let z = hstack(data.instruments, data.exogenous);
    let zt = absorber.residualize_matrix(&z)?;

    let n_inst = data.instruments.ncols();
    let z_names: Vec<String> = (0..n_inst)
        .map(|j| format!("instrument_{j}"))
        .chain(data.exogenous_names.iter().cloned())
        .collect();
    check_absorbed(&x, &xt, &names)?;
    check_absorbed(&z, &zt, &z_names)?;
    let inst_terms: Vec<&str> = z_names[..n_inst].iter().map(String::as_str).collect();
    let mut first_stage = Vec::new();
    for (j, name) in data.endogenous_names.iter().enumerate() {
        let xj = xt.column(j).into_owned();
        let fs = fit_ols(Fit { y: &xj, x: &zt, names: z_names.clone(), fe_rank: absorber.rank(), kind: data.covariance })?;
        let f_stat = fs.wald_test(&inst_terms)?.f_stat;
        first_stage.push(FirstStage { endogenous: name.clone(), f_stat, weak: !(f_stat >= WEAK_INSTRUMENT_F) });
    }

    let mut result = fit_iv(Fit { y: &yt, x: &xt, names, fe_rank: absorber.rank(), kind: data.covariance }, &zt)?;
    result.first_stage = first_stage;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|j| format!("x{j}")).collect()
    }

    fn random_panel(seed: u64, firms: u64, years: u64) -> (Vec<f64>, DMatrix<f64>, Vec<u64>, Vec<u64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = (firms * years) as usize;
        let x = DMatrix::from_fn(n, 2, |_, _| rng.random::<f64>() - 0.5);
        let firm: Vec<u64> = (0..firms).flat_map(|f| std::iter::repeat_n(f, years as usize)).collect();
        let year: Vec<u64> = (0..firms).flat_map(|_| 0..years).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| 1.5 * x[(i, 0)] - 0.7 * x[(i, 1)] + firm[i] as f64 * 0.3 + (year[i] as f64).sin() + rng.random::<f64>())
            .collect();
        (y, x, firm, year)
    }

    #[test]
    fn iv_with_self_instrument_equals_ols() {
        let (y, x, firm, year) = random_panel(1, 20, 8);
        let factors = vec![firm.clone(), year];
        let ols = within_fe_ols(&y, &x, &names(2), &factors, &firm).unwrap();
        let empty = DMatrix::zeros(y.len(), 0);
        let iv = tsls(&IvData {
            y: &y,
            endogenous: &x,
            endogenous_names: &names(2),
            instruments: &x,
            exogenous: &empty,
            exogenous_names: &[],
            factors: &factors,
            covariance: &CovarianceKind::Cluster { clusters: firm.clone() },
        })
        .unwrap();
        for i in 0..2 {
            assert!((ols.coefficients[i] - iv.coefficients[i]).abs() < 1e-10);
            assert!((ols.se(i) - iv.se(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn regressor_absorbed_by_effects_is_rank_deficient() {
        let (y, mut x, firm, year) = random_panel(3, 10, 5);
        for i in 0..y.len() {
            x[(i, 1)] = 0.4 * f64::from(year[i] >= 3);
        }
        let err = within_fe_ols(&y, &x, &names(2), &[firm.clone(), year], &firm).unwrap_err();
        assert!(matches!(err, EconError::RankDeficient(ref v) if v == &["x1".to_string()]), "{err:?}");
    }

    #[test]
    fn underidentified_rejected() {
        let (y, x, firm, year) = random_panel(2, 10, 5);
        let one = x.columns(0, 1).into_owned();
        let empty = DMatrix::zeros(y.len(), 0);
        let err = tsls(&IvData {
            y: &y,
            endogenous: &x,
            endogenous_names: &names(2),
            instruments: &one,
            exogenous: &empty,
            exogenous_names: &[],
            factors: &[firm.clone(), year],
            covariance: &CovarianceKind::Cluster { clusters: firm },
        });
        assert!(matches!(err, Err(EconError::Underidentified { .. })));
    }

    #[test]
    fn rank_deficiency_names_column() {
        let (y, x, firm, year) = random_panel(3, 10, 5);
        let mut x3 = DMatrix::zeros(y.len(), 3);
        x3.columns_mut(0, 2).copy_from(&x);
        for i in 0..y.len() {
            x3[(i, 2)] = 2.0 * x[(i, 0)] - x[(i, 1)];
        }
        match within_fe_ols(&y, &x3, &names(3), &[firm.clone(), year], &firm) {
            Err(EconError::RankDeficient(cols)) => assert_eq!(cols, vec!["x2".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn one_cluster_rejected() {
        let (y, x, _, _) = random_panel(4, 1, 12);
        let one = vec![7u64; y.len()];
        assert!(matches!(within_fe_ols(&y, &x, &names(2), &[], &one), Err(EconError::TooFewClusters(1))));
    }
}
