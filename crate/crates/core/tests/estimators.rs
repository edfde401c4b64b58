use std::collections::BTreeMap;

use debt_inflation::econometrics::{
    binned_means, debt_inflation_iv, debt_inflation_regression, did, event_study, fama_macbeth, long_difference,
    ols_absorbed, portfolio_sort, tsls, within_fe_ols, CovarianceKind, DidSpec, EconError, EventSpec, IvData,
    LongDiffSpec, ShockRegressionSpec, SortObs, TimeEffects, DID_TERM, LONG_DIFF_TERM,
};
use debt_inflation::panel::{simulate_panel, stylized_price_levels, FirmYear, PanelConfig, PanelEffect};
use debt_inflation::shocks::debt_inflation;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct RandomPanel {
    y: Vec<f64>,
    x: DMatrix<f64>,
    firm: Vec<u64>,
    year: Vec<u64>,
}

fn random_panel(seed: u64, firms: u64, years: u64, k: usize) -> RandomPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (firms * years) as usize;
    let firm: Vec<u64> = (0..firms).flat_map(|f| std::iter::repeat_n(100 + f, years as usize)).collect();
    let year: Vec<u64> = (0..firms).flat_map(|_| 1914..1914 + years).collect();
    let x = DMatrix::from_fn(n, k, |i, _| rng.random::<f64>() + 0.1 * (firm[i] % 7) as f64);
    let y = (0..n)
        .map(|i| {
            let slope: f64 = (0..k).map(|j| (j as f64 + 1.0) * x[(i, j)]).sum();
            slope + (firm[i] % 5) as f64 + (year[i] % 3) as f64 + (rng.random::<f64>() - 0.5) * (1.0 + x[(i, 0)])
        })
        .collect();
    RandomPanel { y, x, firm, year }
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|j| format!("x{j}")).collect()
}

/// Regressors followed by one dummy per firm and one per year except the first.
fn dummy_design(p: &RandomPanel) -> DMatrix<f64> {
    let firms: Vec<u64> = p.firm.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let years: Vec<u64> = p.year.iter().copied().collect::<std::collections::BTreeSet<_>>().into_iter().collect();
    let k = p.x.ncols();
    let cols = k + firms.len() + years.len() - 1;
    DMatrix::from_fn(p.y.len(), cols, |i, j| {
        if j < k {
            p.x[(i, j)]
        } else if j < k + firms.len() {
            f64::from(p.firm[i] == firms[j - k])
        } else {
            f64::from(p.year[i] == years[j - k - firms.len() + 1])
        }
    })
}

fn normal_equations(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
    (&xtx_inv * x.transpose() * y, xtx_inv)
}

/// Liang-Zeger sandwich accumulated one score at a time.
fn sandwich(x: &DMatrix<f64>, e: &DVector<f64>, bread: &DMatrix<f64>, clusters: &[u64]) -> DMatrix<f64> {
    let (n, k) = (x.nrows(), x.ncols());
    let mut scores: BTreeMap<u64, DVector<f64>> = BTreeMap::new();
    for i in 0..n {
        let s = scores.entry(clusters[i]).or_insert_with(|| DVector::zeros(k));
        for j in 0..k {
            s[j] += x[(i, j)] * e[i];
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in scores.values() {
        meat += s * s.transpose();
    }
    let g = scores.len() as f64;
    let factor = g / (g - 1.0) * ((n - 1) as f64 / (n - k) as f64);
    bread * meat * bread * factor
}

#[test]
fn within_estimator_matches_dummy_ols_and_sandwich() {
    let p = random_panel(11, 20, 8, 2);
    let fit = within_fe_ols(&p.y, &p.x, &names(2), &[p.firm.clone(), p.year.clone()], &p.firm).unwrap();
    let d = dummy_design(&p);
    let y = DVector::from_vec(p.y.clone());
    let (b, bread) = normal_equations(&d, &y);
    let e = &y - &d * &b;
    let v = sandwich(&d, &e, &bread, &p.firm);
    for j in 0..2 {
        assert!((fit.coefficients[j] - b[j]).abs() < 1e-10, "coef {j}");
        assert!((fit.covariance[(j, j)] - v[(j, j)]).abs() < 1e-10, "var {j}");
    }
    assert!((fit.covariance[(0, 1)] - v[(0, 1)]).abs() < 1e-10);
    for (r, o) in fit.residuals.iter().zip(e.iter()) {
        assert!((r - o).abs() < 1e-10);
    }
    assert_eq!(fit.n_params, d.ncols());
    assert_eq!(fit.n_clusters, 20);
}

#[test]
fn hc1_equals_one_observation_per_cluster() {
    let p = random_panel(12, 20, 8, 2);
    let factors = [p.firm.clone(), p.year.clone()];
    let hc1 = ols_absorbed(&p.y, &p.x, &names(2), &factors, &CovarianceKind::Hc1).unwrap();
    let own: Vec<u64> = (0..p.y.len() as u64).collect();
    let cl = ols_absorbed(&p.y, &p.x, &names(2), &factors, &CovarianceKind::Cluster { clusters: own }).unwrap();
    for j in 0..2 {
        for k in 0..2 {
            assert!((hc1.covariance[(j, k)] - cl.covariance[(j, k)]).abs() < 1e-10);
        }
    }
    assert_eq!(cl.singleton_clusters, p.y.len());
}

#[test]
fn alternating_projections_match_dummies_on_large_panel() {
    let p = random_panel(13, 700, 8, 1);
    assert!(p.y.len() >= debt_inflation::econometrics::ALTERNATING_THRESHOLD);
    let fit = within_fe_ols(&p.y, &p.x, &names(1), &[p.firm.clone(), p.year.clone()], &p.firm).unwrap();
    let d = dummy_design(&p);
    let (b, _) = normal_equations(&d, &DVector::from_vec(p.y.clone()));
    assert!((fit.coefficients[0] - b[0]).abs() < 1e-9);
}

#[test]
fn just_identified_iv_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = random_panel(14, 20, 8, 1);
    let n = p.y.len();
    let z = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>());
    let x = DMatrix::from_fn(n, 1, |i, _| 0.8 * z[(i, 0)] + 0.3 * p.x[(i, 0)]);
    let y: Vec<f64> = (0..n).map(|i| 2.0 * x[(i, 0)] + p.y[i]).collect();
    let empty = DMatrix::zeros(n, 0);
    let factors = [p.firm.clone(), p.year.clone()];
    let fit = tsls(&IvData {
        y: &y,
        endogenous: &x,
        endogenous_names: &["x".to_string()],
        instruments: &z,
        exogenous: &empty,
        exogenous_names: &[],
        factors: &factors,
        covariance: &CovarianceKind::Cluster { clusters: p.firm.clone() },
    })
    .unwrap();
    // Demean with the dummy projection M = I − D(D'D)⁻¹D'.
    let dummies = dummy_design(&RandomPanel { y: y.clone(), x: DMatrix::zeros(n, 0), firm: p.firm.clone(), year: p.year.clone() });
    let m = DMatrix::identity(n, n) - &dummies * (dummies.transpose() * &dummies).try_inverse().unwrap() * dummies.transpose();
    let (yt, xt, zt) = (&m * DVector::from_vec(y), &m * &x, &m * &z);
    let b = (zt.transpose() * &xt)[(0, 0)].recip() * (zt.transpose() * &yt)[(0, 0)];
    assert!((fit.coefficients[0] - b).abs() < 1e-10);
    assert!(!fit.first_stage[0].weak);
}

#[test]
fn weak_instrument_is_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_panel(15, 30, 6, 1);
    let n = p.y.len();
    let z = DMatrix::from_fn(n, 1, |_, _| rng.random::<f64>() - 0.5);
    let x = DMatrix::from_fn(n, 1, |i, _| 1e-4 * z[(i, 0)] + p.x[(i, 0)]);
    let empty = DMatrix::zeros(n, 0);
    let fit = tsls(&IvData {
        y: &p.y,
        endogenous: &x,
        endogenous_names: &["x".to_string()],
        instruments: &z,
        exogenous: &empty,
        exogenous_names: &[],
        factors: &[p.firm.clone(), p.year.clone()],
        covariance: &CovarianceKind::Cluster { clusters: p.firm.clone() },
    })
    .unwrap();
    assert!(fit.first_stage[0].f_stat < 10.0);
    assert!(fit.first_stage[0].weak);
}

#[test]
fn fama_macbeth_matches_loop_of_ols() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (t, n) = (12, 40);
    let periods: Vec<i32> = (0..t).flat_map(|p| std::iter::repeat_n(p, n)).collect();
    let x = DMatrix::from_fn(t as usize * n, 2, |_, _| rng.random::<f64>());
    let y: Vec<f64> = (0..x.nrows()).map(|i| 0.5 * x[(i, 0)] - x[(i, 1)] + rng.random::<f64>()).collect();
    let fit = fama_macbeth(&periods, &y, &x, &names(2)).unwrap();
    let mut slopes: Vec<Vec<f64>> = Vec::new();
    for p in 0..t {
        let rows: Vec<usize> = (0..y.len()).filter(|&i| periods[i] == p).collect();
        let d = DMatrix::from_fn(rows.len(), 3, |r, c| if c == 0 { 1.0 } else { x[(rows[r], c - 1)] });
        let yv = DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]));
        let svd = d.svd(true, true);
        slopes.push(svd.solve(&yv, 1e-14).unwrap().iter().copied().collect());
    }
    for j in 0..3 {
        let s: Vec<f64> = slopes.iter().map(|b| b[j]).collect();
        let m = s.iter().sum::<f64>() / t as f64;
        let sd = (s.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (t - 1) as f64).sqrt();
        assert!((fit.coefficients[j] - m).abs() < 1e-12);
        assert!((fit.se[j] - sd / (t as f64).sqrt()).abs() < 1e-12);
    }
}

fn noiseless_panel(beta: f64, seed: u64) -> Vec<FirmYear> {
    simulate_panel(&PanelConfig::new(60, beta, seed).noiseless()).unwrap()
}

#[test]
fn did_zero_noise_is_exact() {
    for beta in [0.5, 41.6] {
        let fit = did(&noiseless_panel(beta, 1), &DidSpec::default()).unwrap();
        assert!((fit.coef(DID_TERM).unwrap() - beta).abs() < 1e-8);
    }
}

#[test]
fn did_estimates_are_row_order_invariant() {
    let mut panel = simulate_panel(&PanelConfig::new(80, 41.6, 9)).unwrap();
    let a = did(&panel, &DidSpec::default()).unwrap();
    panel.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let b = did(&panel, &DidSpec::default()).unwrap();
    assert!((a.coefficients[0] - b.coefficients[0]).abs() < 1e-10);
    assert!((a.se(0) - b.se(0)).abs() < 1e-10);
}

#[test]
fn event_study_path_on_post_only_effect() {
    let panel = noiseless_panel(41.6, 2);
    let study = event_study(&panel, &EventSpec::default()).unwrap();
    assert_eq!(study.path.len(), 9);
    assert!(study.path.iter().all(|c| c.year != 1918));
    for c in &study.path {
        let expected = if c.year >= 1920 { 41.6 } else { 0.0 };
        assert!((c.beta - expected).abs() < 1e-8, "{} {}", c.year, c.beta);
    }
    let industry = event_study(&panel, &EventSpec { effects: TimeEffects::IndustryYear, ..EventSpec::default() }).unwrap();
    for (a, b) in study.path.iter().zip(&industry.path) {
        assert!((a.beta - b.beta).abs() < 1e-8);
    }
    let missing = event_study(&panel, &EventSpec { base_year: 1930, ..EventSpec::default() });
    assert!(matches!(missing, Err(EconError::MissingYear(1930))));
}

#[test]
fn event_study_noisy_pre_period_is_flat() {
    let panel = simulate_panel(&PanelConfig::new(700, 41.6, 4)).unwrap();
    let study = event_study(&panel, &EventSpec::default()).unwrap();
    for c in &study.path {
        let expected = if c.year >= 1920 { 41.6 } else { 0.0 };
        assert!((c.beta - expected).abs() < 3.0 * c.se, "{} {} {}", c.year, c.beta, c.se);
    }
}

fn shock_config(n: usize, contemporaneous: f64, lagged: f64, seed: u64) -> PanelConfig {
    PanelConfig {
        effect: PanelEffect::ShockLoading {
            contemporaneous,
            lagged,
            base_year: 1917,
            price_levels: stylized_price_levels(1913, 1923),
        },
        ..PanelConfig::new(n, 0.0, seed)
    }
}

#[test]
fn shock_regression_recovers_lag_loading() {
    let levels = stylized_price_levels(1913, 1923);
    let exact = simulate_panel(&shock_config(60, 0.0, 80.0, 3).noiseless()).unwrap();
    let fit = debt_inflation_regression(&exact, &levels, &ShockRegressionSpec::default()).unwrap();
    assert!(fit.coef("debt_inflation").unwrap().abs() < 1e-8);
    assert!((fit.coef("debt_inflation_lag1").unwrap() - 80.0).abs() < 1e-8);

    let noisy = simulate_panel(&shock_config(700, 0.0, 80.0, 3)).unwrap();
    let fit = debt_inflation_regression(&noisy, &levels, &ShockRegressionSpec::default()).unwrap();
    let lag = fit.index("debt_inflation_lag1").unwrap();
    assert!(fit.p_value(lag) < 0.01);
    assert!(fit.joint_test.as_ref().unwrap().p_value < 0.05);
    assert!(fit.coefficients[0].abs() < 3.0 * fit.se(0));
}

#[test]
fn shock_regression_needs_lag_coverage() {
    let levels = stylized_price_levels(1914, 1923);
    let panel = noiseless_panel(1.0, 1);
    assert!(matches!(
        debt_inflation_regression(&panel, &levels, &ShockRegressionSpec::default()),
        Err(EconError::MissingYear(1913))
    ));
}

#[test]
fn did_effect_shows_up_positive_in_shock_regression() {
    let panel = simulate_panel(&PanelConfig::new(700, 41.6, 8)).unwrap();
    let levels = stylized_price_levels(1913, 1923);
    let spec = ShockRegressionSpec { lags: 0, ..ShockRegressionSpec::default() };
    let fit = debt_inflation_regression(&panel, &levels, &spec).unwrap();
    assert!(fit.coefficients[0] > 0.0 && fit.p_value(0) < 0.01);
}

#[test]
fn real_leverage_iv_recovers_structural_slope() {
    // y = γ·lev·P0/P_t, so 2SLS on real leverage returns γ exactly.
    let levels = stylized_price_levels(1913, 1923);
    let mut panel = noiseless_panel(0.0, 6);
    for r in &mut panel {
        r.log_employment_x100 += -30.0 * r.leverage_1917 * levels[&1917] / levels[&r.year];
    }
    let fit = debt_inflation_iv(&panel, &levels, &ShockRegressionSpec::default()).unwrap();
    assert!((fit.coefficients[0] + 30.0).abs() < 1e-8);
    assert_eq!(fit.first_stage.len(), 1);
    let di = debt_inflation(0.43, levels[&1923] / levels[&1917] - 1.0).unwrap();
    assert!(di > 0.0 && di < 0.43);
}

#[test]
fn long_difference_matches_normal_equations() {
    let panel = simulate_panel(&PanelConfig::new(50, 41.6, 12)).unwrap();
    let spec = LongDiffSpec { from: 1918, to: 1923, controls: vec![debt_inflation::econometrics::Control::Size], lagged_from: None };
    let fit = long_difference(&panel, &spec).unwrap();
    let mut by_firm: BTreeMap<u64, BTreeMap<i32, &FirmYear>> = BTreeMap::new();
    for r in &panel {
        by_firm.entry(r.firm_id).or_default().insert(r.year, r);
    }
    let rows: Vec<(f64, f64, f64)> = by_firm
        .values()
        .map(|y| (y[&1923].log_employment_x100 - y[&1918].log_employment_x100, y[&1918].leverage_1917, y[&1918].size.unwrap()))
        .collect();
    let x = DMatrix::from_fn(rows.len(), 3, |i, j| [1.0, rows[i].1, rows[i].2][j]);
    let yv = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.0));
    let (b, bread) = normal_equations(&x, &yv);
    let e = &yv - &x * &b;
    let own: Vec<u64> = (0..rows.len() as u64).collect();
    let v = sandwich(&x, &e, &bread, &own);
    for j in 0..3 {
        assert!((fit.regression.coefficients[j] - b[j]).abs() < 1e-10);
        assert!((fit.regression.se(j) - v[(j, j)].sqrt()).abs() < 1e-10);
    }
    assert_eq!(fit.dropped_firms, 0);
}

#[test]
fn long_difference_zero_noise_and_placebo() {
    let panel = simulate_panel(&PanelConfig { year_effect_sd: 0.0, ..PanelConfig::new(40, 41.6, 3).noiseless() }).unwrap();
    let spec = LongDiffSpec { from: 1918, to: 1923, controls: vec![], lagged_from: None };
    let fit = long_difference(&panel, &spec).unwrap();
    assert!((fit.regression.coef(LONG_DIFF_TERM).unwrap() - 41.6).abs() < 1e-8);

    let noisy = simulate_panel(&PanelConfig::new(700, 41.6, 3)).unwrap();
    let placebo = long_difference(&noisy, &LongDiffSpec { from: 1916, to: 1918, controls: vec![], lagged_from: None }).unwrap();
    let j = placebo.regression.index(LONG_DIFF_TERM).unwrap();
    assert!(placebo.regression.coefficients[j].abs() < 3.0 * placebo.regression.se(j));
}

#[test]
fn long_difference_drops_firms_without_endpoints() {
    let mut panel = simulate_panel(&PanelConfig::new(60, 1.0, 4)).unwrap();
    panel.retain(|r| !(r.firm_id <= 3 && r.year == 1923));
    let fit = long_difference(&panel, &LongDiffSpec { from: 1918, to: 1923, controls: vec![], lagged_from: Some(1916) }).unwrap();
    assert_eq!(fit.dropped_firms, 3);
    assert_eq!(fit.regression.n_obs, 57);
}

#[test]
fn portfolio_sort_partitions_every_period() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let obs: Vec<SortObs> = (1..=6)
        .flat_map(|t| (0..23u64).map(move |f| (t, f)))
        .map(|(t, f)| SortObs { period: t, firm_id: f, characteristic: (rng.random::<f64>() * 4.0).floor(), ret: rng.random() })
        .collect();
    let res = portfolio_sort(&obs, 5).unwrap();
    assert_eq!(res.buckets.iter().map(|b| b.n_obs).sum::<usize>(), obs.len());
    let sizes: Vec<usize> = res.buckets.iter().map(|b| b.n_obs / 6).collect();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    let hml: f64 = res.period_means.iter().map(|(_, m)| m[4] - m[0]).sum::<f64>() / 6.0;
    assert!((res.hml_mean - hml).abs() < 1e-15);
    assert!((res.hml_mean - (res.buckets[4].mean_return - res.buckets[0].mean_return)).abs() < 1e-12);
}

#[test]
fn binned_means_match_group_by_quantile_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 203;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x.iter().map(|v| v * v + rng.random::<f64>()).collect();
    let bins = binned_means(&x, &y, 20, None, &[]).unwrap();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    for (b, bin) in bins.iter().enumerate() {
        let members: Vec<usize> = (0..n).filter(|&p| ((p + 1) * 20).div_ceil(n) == b + 1).map(|p| idx[p]).collect();
        let mx = members.iter().map(|&i| x[i]).sum::<f64>() / members.len() as f64;
        let my = members.iter().map(|&i| y[i]).sum::<f64>() / members.len() as f64;
        assert_eq!(bin.n, members.len());
        assert!((bin.mean_x - mx).abs() < 1e-12);
        assert!((bin.mean_y - my).abs() < 1e-12);
    }
}

#[test]
fn residualized_bins_follow_partial_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 2000;
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let x: Vec<f64> = w.iter().map(|v| v + rng.random::<f64>()).collect();
    let y: Vec<f64> = (0..n).map(|i| 1.5 * x[i] - 4.0 * w[i] + 0.1 * (rng.random::<f64>() - 0.5)).collect();
    let controls = DMatrix::from_column_slice(n, 1, &w);
    let bins = binned_means(&x, &y, 20, Some(&controls), &[]).unwrap();
    // With the residualized data exactly linear up to small noise, the bin
    // means lie on a line of slope 1.5.
    let bx: Vec<f64> = bins.iter().map(|b| b.mean_x).collect();
    let by: Vec<f64> = bins.iter().map(|b| b.mean_y).collect();
    let (mx, my) = (bx.iter().sum::<f64>() / 20.0, by.iter().sum::<f64>() / 20.0);
    let slope = bx.iter().zip(&by).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / bx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope - 1.5).abs() < 0.02, "slope {slope}");
}
