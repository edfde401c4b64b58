use std::collections::BTreeMap;

use super::PanelError;
use crate::numerics::nearest_rank;

fn check_finite(values: &[f64]) -> Result<(), PanelError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(PanelError::InvalidConfig { name: "values", reason: format!("entry {i} is not finite") }),
        None => Ok(()),
    }
}

/// Clamps each value to its group's nearest-rank `p_lo` and `p_hi`
/// percentiles (the `ceil(p·n)`-th order statistics).
pub fn winsorize_by_group<G: Ord>(values: &[f64], groups: &[G], p_lo: f64, p_hi: f64) -> Result<Vec<f64>, PanelError> {
    if values.is_empty() {
        return Err(PanelError::Empty);
    }
    if values.len() != groups.len() {
        return Err(PanelError::LengthMismatch { values: values.len(), groups: groups.len() });
    }
    if !(0.0..=1.0).contains(&p_lo) || !(0.0..=1.0).contains(&p_hi) || p_lo > p_hi {
        return Err(PanelError::InvalidConfig { name: "percentiles", reason: format!("need 0 <= {p_lo} <= {p_hi} <= 1") });
    }
    check_finite(values)?;
    let mut members: BTreeMap<&G, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    let mut out = values.to_vec();
    for idx in members.values() {
        let mut sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let lo = sorted[nearest_rank(p_lo, n) - 1];
        let hi = sorted[nearest_rank(p_hi, n) - 1];
        for &i in idx {
            out[i] = values[i].clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Keep-mask that drops values strictly above the nearest-rank `p` percentile.
pub fn trim_above(values: &[f64], p: f64) -> Result<Vec<bool>, PanelError> {
    if values.is_empty() {
        return Err(PanelError::Empty);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(PanelError::InvalidConfig { name: "p", reason: format!("{p} outside [0, 1]") });
    }
    check_finite(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cut = sorted[nearest_rank(p, sorted.len()) - 1];
    Ok(values.iter().map(|&v| v <= cut).collect())
}

/// The three balance-sheet totals reported for a firm-year.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRow {
    pub firm_id: u64,
    pub year: i32,
    pub sum_assets: f64,
    pub sum_liabilities_equity: f64,
    pub reported_total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceFlag {
    pub firm_id: u64,
    pub year: i32,
    /// Largest `|a − b| / max(a, b)` over the three pairs.
    pub max_relative_difference: f64,
    pub flagged: bool,
    /// All three totals are zero.
    pub degenerate: bool,
}

/// Relative gap above which a pair of totals disagrees.
pub const BALANCE_TOLERANCE: f64 = 0.20;

/// Flags rows whose totals disagree pairwise by more than 20% of the larger
/// total of the pair. Rows with all totals zero are flagged as degenerate.
pub fn balance_check(rows: &[BalanceRow]) -> Result<Vec<BalanceFlag>, PanelError> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let totals = [r.sum_assets, r.sum_liabilities_equity, r.reported_total];
            if totals.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(PanelError::InvalidConfig { name: "balance row", reason: format!("row {i} has a negative or non-finite total") });
            }
            let degenerate = totals.iter().all(|&t| t == 0.0);
            let rel = |a: f64, b: f64| {
                let m = a.max(b);
                if m == 0.0 { 0.0 } else { (a - b).abs() / m }
            };
            let max_rel = rel(totals[0], totals[1]).max(rel(totals[0], totals[2])).max(rel(totals[1], totals[2]));
            Ok(BalanceFlag {
                firm_id: r.firm_id,
                year: r.year,
                max_relative_difference: max_rel,
                flagged: degenerate || max_rel > BALANCE_TOLERANCE,
                degenerate,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(a: f64, b: f64, c: f64) -> BalanceRow {
        BalanceRow { firm_id: 1, year: 1920, sum_assets: a, sum_liabilities_equity: b, reported_total: c }
    }

    /// Order-statistic enumeration oracle for one group.
    fn oracle_winsor(values: &[f64], p_lo: f64, p_hi: f64) -> Vec<f64> {
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let mut k_lo = 1;
        while (k_lo as f64) < p_lo * n - 1e-9 {
            k_lo += 1;
        }
        let mut k_hi = 1;
        while (k_hi as f64) < p_hi * n - 1e-9 {
            k_hi += 1;
        }
        values.iter().map(|v| v.max(sorted[k_lo - 1]).min(sorted[k_hi - 1])).collect()
    }

    #[test]
    fn winsorize_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        let g = vec![0; 100];
        let w = winsorize_by_group(&v, &g, 0.01, 0.99).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[99], 99.0);
        assert_eq!(w[98], 99.0);
        assert_eq!(w, oracle_winsor(&v, 0.01, 0.99));
    }

    #[test]
    fn winsorize_two_hundred_duplicated() {
        let v: Vec<f64> = (1..=100).chain(1..=100).map(f64::from).collect();
        let w = winsorize_by_group(&v, &vec![0; 200], 0.01, 0.99).unwrap();
        // ranks 2 and 198 of the sorted sample are 1 and 99
        assert_eq!(w, oracle_winsor(&v, 0.01, 0.99));
        assert_eq!(w.iter().cloned().fold(f64::MIN, f64::max), 99.0);
    }

    #[test]
    fn winsorize_groups_separately_and_idempotent() {
        let v = vec![1.0, 50.0, 3.0, 1000.0, 2.0, -7.0, 4.0, 4.0];
        let g = vec![1, 1, 1, 1, 2, 2, 2, 2];
        let once = winsorize_by_group(&v, &g, 0.25, 0.75).unwrap();
        assert_eq!(once, vec![1.0, 50.0, 3.0, 50.0, 2.0, -7.0, 4.0, 4.0]);
        assert_eq!(winsorize_by_group(&once, &g, 0.25, 0.75).unwrap(), once);
        let same = vec![2.5; 8];
        assert_eq!(winsorize_by_group(&same, &g, 0.01, 0.99).unwrap(), same);
        assert!(winsorize_by_group::<i32>(&[], &[], 0.01, 0.99).is_err());
    }

    #[test]
    fn trim_examples() {
        let v: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        let keep = trim_above(&v, 0.95).unwrap();
        assert_eq!(keep.iter().filter(|k| !**k).count(), 5);
        assert!(!keep[0] && keep[5]);
        assert!(trim_above(&[3.0; 9], 0.95).unwrap().iter().all(|k| *k));
        assert!(trim_above(&[], 0.95).is_err());
    }

    #[test]
    fn balance_examples() {
        let flags = balance_check(&[row(100.0, 100.0, 100.0), row(100.0, 121.0, 100.0), row(100.0, 130.0, 100.0), row(0.0, 0.0, 0.0)]).unwrap();
        assert!(!flags[0].flagged);
        assert!(!flags[1].flagged);
        assert!((flags[1].max_relative_difference - 21.0 / 121.0).abs() < 1e-15);
        assert!(flags[2].flagged);
        assert!(flags[3].flagged && flags[3].degenerate);
        assert!(balance_check(&[row(-1.0, 1.0, 1.0)]).is_err());
    }
}
