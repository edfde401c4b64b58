use chrono::NaiveDate;
use debt_inflation::econometrics::{portfolio_sort, SortObs};
use debt_inflation::model::ModelParams;
use debt_inflation::panel::{trim_above, winsorize_by_group};
use debt_inflation::shocks::{
    debt_inflation, duration_since_last_increase, forward_premium, log_inflation, Frequency, PricePath,
};
use proptest::prelude::*;

fn daily_path(levels: &[f64]) -> PricePath {
    let start = NaiveDate::from_ymd_opt(1920, 1, 1).unwrap();
    let points = levels.iter().enumerate().map(|(i, &l)| (start + chrono::Days::new(i as u64), l)).collect();
    PricePath::new(Frequency::Daily, points).unwrap()
}

proptest! {
    #[test]
    fn cutoff_closed_form(p in 0.01f64..1e4) {
        let m = ModelParams::default_calibration();
        let z = m.default_cutoff(p).unwrap().raw;
        let expected = m.k0() - m.d0() / p;
        prop_assert!((z - expected).abs() <= 1e-15 * expected.abs().max(1.0));
    }

    #[test]
    fn default_share_nonincreasing(mut grid in prop::collection::vec(0.05f64..500.0, 2..60)) {
        let m = ModelParams::default_calibration();
        grid.sort_by(f64::total_cmp);
        let shares: Vec<f64> = grid.iter().map(|&p| m.default_share(p).unwrap()).collect();
        for w in shares.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn debt_inflation_bounded_monotone_concave(lev in 0.0f64..=1.0, pi in 0.0f64..1e6, step in 0.01f64..10.0) {
        let f = |x: f64| debt_inflation(lev, x).unwrap();
        let (a, b, c) = (f(pi), f(pi + step), f(pi + 2.0 * step));
        prop_assert!(a <= lev && b <= lev);
        prop_assert!(b >= a);
        prop_assert!(b - a >= c - b - 1e-15);
    }

    #[test]
    fn forward_premium_sign(f in 0.01f64..100.0, s in 0.01f64..100.0) {
        let prem = forward_premium(f, s).unwrap();
        prop_assert_eq!(prem > 0.0, f > s);
    }

    #[test]
    fn log_inflation_telescopes(levels in prop::collection::vec(0.5f64..50.0, 6..40), h in 1usize..5) {
        let path = daily_path(&levels);
        let one = log_inflation(&path, 1).unwrap();
        let many = log_inflation(&path, h).unwrap();
        for (k, obs) in many.iter().enumerate() {
            let sum: f64 = one[k..k + h].iter().map(|o| o.value).sum();
            prop_assert!((obs.value - sum).abs() < 1e-12);
        }
    }

    #[test]
    fn duration_resets_only_at_increases(levels in prop::collection::vec(1u8..5, 2..50)) {
        let levels: Vec<f64> = levels.into_iter().map(f64::from).collect();
        let path = daily_path(&levels);
        let durations = duration_since_last_increase(&path).unwrap();
        let first_increase = (1..levels.len()).find(|&i| levels[i] > levels[i - 1]);
        match first_increase {
            None => prop_assert!(durations.is_empty()),
            Some(start) => {
                prop_assert_eq!(durations.len(), levels.len() - start);
                for (k, d) in durations.iter().enumerate() {
                    let i = start + k;
                    prop_assert!(d.value >= 0.0);
                    prop_assert_eq!(d.value == 0.0, levels[i] > levels[i - 1]);
                }
            }
        }
    }

    #[test]
    fn winsorize_keeps_order_and_is_idempotent(values in prop::collection::vec(-1e3f64..1e3, 1..80)) {
        let groups = vec![0u8; values.len()];
        let once = winsorize_by_group(&values, &groups, 0.05, 0.95).unwrap();
        let twice = winsorize_by_group(&once, &groups, 0.05, 0.95).unwrap();
        prop_assert_eq!(&once, &twice);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(once[i] <= once[j]);
                }
            }
        }
    }

    #[test]
    fn trimming_only_removes(values in prop::collection::vec(-1e3f64..1e3, 1..80), p in 0.01f64..=1.0) {
        let keep = trim_above(&values, p).unwrap();
        prop_assert_eq!(keep.len(), values.len());
        prop_assert!(keep.iter().filter(|&&k| k).count() <= values.len());
    }

    #[test]
    fn portfolio_buckets_balanced(chars in prop::collection::vec(0u8..6, 5..60), k in 2usize..6) {
        prop_assume!(chars.len() >= k);
        let obs: Vec<SortObs> = chars
            .iter()
            .enumerate()
            .map(|(i, &c)| SortObs { period: 1, firm_id: i as u64, characteristic: f64::from(c), ret: i as f64 })
            .collect();
        let res = portfolio_sort(&obs, k).unwrap();
        let sizes: Vec<usize> = res.buckets.iter().map(|b| b.n_obs).collect();
        prop_assert_eq!(sizes.iter().sum::<usize>(), obs.len());
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for w in res.buckets.windows(2) {
            prop_assert!(w[0].mean_characteristic <= w[1].mean_characteristic);
        }
    }
}
