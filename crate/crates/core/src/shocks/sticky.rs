//! Price setters with a fixed adjustment band facing rising trend inflation.
//!
//! Each setter holds a nominal log price and resets it to a noisy target
//! (the aggregate index plus an idiosyncratic daily draw) whenever the gap
//! leaves `[-band, band]`. Higher trend inflation pushes gaps out of the
//! band sooner, so spells between increases shorten.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{duration_since_last_increase, log_inflation, Frequency, PricePath, ShockError};

#[derive(Debug, Clone, PartialEq)]
pub struct StickyPriceConfig {
    pub n_setters: usize,
    pub start: NaiveDate,
    /// Years at constant `initial_inflation` before recording starts.
    pub burn_in_years: u32,
    /// Recorded years over which inflation rises geometrically.
    pub years: u32,
    /// Annual log inflation at the start of the recorded window.
    pub initial_inflation: f64,
    /// Annual log inflation at the end of the recorded window.
    pub final_inflation: f64,
    /// Half-width of the inaction band in log points.
    pub band: f64,
    /// Daily standard deviation of the idiosyncratic target draw.
    pub idiosyncratic_sd: f64,
    pub seed: u64,
}

impl StickyPriceConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            n_setters: 200,
            start: NaiveDate::from_ymd_opt(1914, 1, 1).expect("valid date"),
            burn_in_years: 3,
            years: 10,
            initial_inflation: 0.10,
            final_inflation: 5.0,
            band: 0.05,
            idiosyncratic_sd: 0.01,
            seed,
        }
    }

    fn validate(&self) -> Result<(), ShockError> {
        let bad = |name, reason| Err(ShockError::InvalidConfig { name, reason });
        if self.n_setters == 0 {
            return bad("n_setters", "must be positive");
        }
        if self.years == 0 {
            return bad("years", "must be positive");
        }
        if !(self.initial_inflation > 0.0 && self.final_inflation > 0.0) {
            return bad("inflation", "must be positive");
        }
        if !(self.band > 0.0) {
            return bad("band", "must be positive");
        }
        if !(self.idiosyncratic_sd >= 0.0) {
            return bad("idiosyncratic_sd", "must be nonnegative");
        }
        Ok(())
    }
}

/// Simulated daily aggregate index and individual price paths.
#[derive(Debug, Clone)]
pub struct StickyPriceSim {
    pub index: PricePath,
    pub setters: Vec<PricePath>,
    /// First date of the recorded window.
    pub record_from: NaiveDate,
}

fn year_offset(start: NaiveDate, years: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(start.year() + years as i32, start.month(), start.day()).expect("valid date")
}

pub fn simulate_sticky_prices(config: &StickyPriceConfig) -> Result<StickyPriceSim, ShockError> {
    config.validate()?;
    let record_from = year_offset(config.start, config.burn_in_years);
    let end = year_offset(record_from, config.years);
    let n_days = (end - config.start).num_days() as usize;
    let burn_days = (record_from - config.start).num_days() as f64;
    let window_days = (end - record_from).num_days() as f64;
    let dates: Vec<NaiveDate> = (0..n_days).map(|i| config.start + Days::new(i as u64)).collect();

    let (lo, hi) = (config.initial_inflation.ln(), config.final_inflation.ln());
    let mut log_index = Vec::with_capacity(n_days);
    let mut level = 0.0;
    for i in 0..n_days {
        let s = ((i as f64 - burn_days) / window_days).clamp(0.0, 1.0);
        let annual = (lo + (hi - lo) * s).exp();
        level += annual / 365.25;
        log_index.push(level);
    }

    let setters: Vec<PricePath> = (0..config.n_setters)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(j as u64);
            let mut price = log_index[0] + config.band * (2.0 * rng.random::<f64>() - 1.0);
            let mut points = Vec::with_capacity(n_days);
            for (i, &date) in dates.iter().enumerate() {
                let noise: f64 = rng.sample(StandardNormal);
                let target = log_index[i] + config.idiosyncratic_sd * noise;
                if (price - target).abs() > config.band {
                    price = target;
                }
                points.push((date, price.exp()));
            }
            PricePath::new(Frequency::Daily, points)
        })
        .collect::<Result<_, _>>()?;

    let index = PricePath::new(Frequency::Daily, dates.iter().copied().zip(log_index.iter().map(|l| l.exp())).collect())?;
    Ok(StickyPriceSim { index, setters, record_from })
}

/// Twelve-month log inflation of the index and the mean duration since
/// the last increase across setters and days, by calendar month.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InflationDuration {
    /// Last day of the month.
    pub date: NaiveDate,
    pub inflation: f64,
    pub mean_duration: f64,
}

pub fn inflation_duration_pairs(sim: &StickyPriceSim) -> Result<Vec<InflationDuration>, ShockError> {
    let key = |d: NaiveDate| (d.year(), d.month());

    let mut month_end: BTreeMap<(i32, u32), (NaiveDate, f64)> = BTreeMap::new();
    for (&d, &l) in sim.index.dates().iter().zip(sim.index.levels()) {
        month_end.insert(key(d), (d, l));
    }
    let monthly = PricePath::new(Frequency::Monthly, month_end.values().copied().collect())?;
    let inflation = log_inflation(&monthly, 12)?;

    let per_setter: Vec<BTreeMap<(i32, u32), (f64, usize)>> = sim
        .setters
        .par_iter()
        .map(|path| {
            let mut acc: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
            for d in duration_since_last_increase(path)? {
                let e = acc.entry(key(d.date)).or_default();
                e.0 += d.value;
                e.1 += 1;
            }
            Ok(acc)
        })
        .collect::<Result<_, ShockError>>()?;
    let mut totals: BTreeMap<(i32, u32), (f64, usize)> = BTreeMap::new();
    for acc in per_setter {
        for (k, (sum, n)) in acc {
            let e = totals.entry(k).or_default();
            e.0 += sum;
            e.1 += n;
        }
    }

    Ok(inflation
        .iter()
        .filter(|d| d.date >= sim.record_from)
        .filter_map(|d| {
            totals.get(&key(d.date)).filter(|(_, n)| *n > 0).map(|&(sum, n)| InflationDuration {
                date: d.date,
                inflation: d.value,
                mean_duration: sum / n as f64,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::spearman;

    fn small(seed: u64) -> StickyPriceConfig {
        StickyPriceConfig { n_setters: 40, years: 4, ..StickyPriceConfig::new(seed) }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = simulate_sticky_prices(&small(3)).unwrap();
        let b = simulate_sticky_prices(&small(3)).unwrap();
        assert_eq!(a.setters, b.setters);
        let c = simulate_sticky_prices(&small(4)).unwrap();
        assert_ne!(a.setters, c.setters);
    }

    #[test]
    fn durations_fall_as_inflation_rises() {
        let sim = simulate_sticky_prices(&small(11)).unwrap();
        let pairs = inflation_duration_pairs(&sim).unwrap();
        assert_eq!(pairs.len(), 48);
        let x: Vec<f64> = pairs.iter().map(|p| p.inflation).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.mean_duration).collect();
        let r = spearman(&x, &y).unwrap();
        assert!(r.rho < 0.0 && r.p_value < 0.01, "{r:?}");
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = StickyPriceConfig { band: 0.0, ..StickyPriceConfig::new(1) };
        assert!(simulate_sticky_prices(&cfg).is_err());
    }
}
