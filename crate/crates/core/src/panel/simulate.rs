use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal};
use rayon::prelude::*;

use super::{beta_shape, PanelConfig, PanelEffect, PanelError, ReturnsConfig};
use crate::shocks::debt_inflation;

/// One firm-year observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmYear {
    pub firm_id: u64,
    pub industry_id: u32,
    pub year: i32,
    /// Liabilities over assets in the base year; constant within firm.
    pub leverage_1917: f64,
    /// Log employment times 100.
    pub log_employment_x100: f64,
    pub interest_share: Option<f64>,
    pub production_share: Option<f64>,
    pub size: Option<f64>,
    pub fixed_share: Option<f64>,
    pub fcf_assets: Option<f64>,
    pub margin: Option<f64>,
    pub tobins_q: Option<f64>,
    pub ret: Option<f64>,
}

/// One firm-period return with the characteristic observed at the end of
/// the previous period.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnObs {
    pub firm_id: u64,
    pub period: i32,
    pub leverage_lag: f64,
    pub market_return: f64,
    pub ret: f64,
}

fn normal(sd: f64) -> Normal<f64> {
    Normal::new(0.0, sd).expect("validated sd")
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Price levels with annual log inflation `0.05·1.7^k` in year `first + k`,
/// normalized to one in `first`: slow at first, explosive by the end.
pub fn stylized_price_levels(first: i32, last: i32) -> BTreeMap<i32, f64> {
    let mut out = BTreeMap::new();
    let mut log_level = 0.0;
    for (k, year) in (first..=last).enumerate() {
        if k > 0 {
            log_level += 0.05 * 1.7f64.powi(k as i32);
        }
        out.insert(year, f64::exp(log_level));
    }
    out
}

/// Draws a firm panel
/// `y_it = α_i + δ_t + η_{s(i),t} + effect_it + ε_it`.
///
/// Stream 0 of the seeded ChaCha generator holds year and industry-year
/// shocks; firm `i` draws from stream `i + 1`, so output does not depend on
/// how firms are scheduled across threads. Every draw is made even for
/// firm-years that end up missing.
pub fn simulate_panel(config: &PanelConfig) -> Result<Vec<FirmYear>, PanelError> {
    config.validate()?;
    let (a, b) = beta_shape(config.leverage_mean, config.leverage_sd)?;
    let leverage = Beta::new(a, b).map_err(|e| PanelError::InvalidConfig { name: "leverage", reason: e.to_string() })?;
    let years: Vec<i32> = (config.first_year..=config.last_year).collect();

    let mut common = stream(config.seed, 0);
    let year_effect: Vec<f64> = years.iter().map(|_| normal(config.year_effect_sd).sample(&mut common)).collect();
    let industry_year: Vec<Vec<f64>> = (0..config.n_industries)
        .map(|_| years.iter().map(|_| normal(config.industry_year_sd).sample(&mut common)).collect())
        .collect();

    let firms: Vec<Vec<FirmYear>> = (0..config.n_firms)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, i as u64 + 1);
            let lev: f64 = leverage.sample(&mut rng);
            let industry = rng.random_range(0..config.n_industries);
            let intercept = config.employment_level + normal(config.firm_effect_sd).sample(&mut rng);
            let size = normal(1.0).sample(&mut rng);
            let fixed_share: f64 = rng.random();
            let fcf_assets = 0.05 + normal(0.05).sample(&mut rng);
            let margin = 0.10 + normal(0.05).sample(&mut rng);
            let tobins_q = LogNormal::new(0.0, 0.3).expect("valid").sample(&mut rng);
            let interest_dist = Beta::new(2.0, 20.0).expect("valid");
            let production_dist = Beta::new(5.0, 3.0).expect("valid");

            let mut rows = Vec::with_capacity(years.len());
            for (t, &year) in years.iter().enumerate() {
                let noise = normal(config.noise_sd).sample(&mut rng);
                let missing = rng.random::<f64>() < config.gap_prob;
                let interest_share = interest_dist.sample(&mut rng);
                let production_share = production_dist.sample(&mut rng);
                if missing {
                    continue;
                }
                let effect = match &config.effect {
                    PanelEffect::PostEvent { beta } => {
                        if year >= config.event_year {
                            beta * lev
                        } else {
                            0.0
                        }
                    }
                    PanelEffect::ShockLoading { contemporaneous, lagged, base_year, price_levels } => {
                        let p0 = price_levels[base_year];
                        let di = |y: i32| debt_inflation(lev, price_levels[&y] / p0 - 1.0).expect("valid inputs");
                        contemporaneous * di(year) + lagged * di(year - 1)
                    }
                };
                rows.push(FirmYear {
                    firm_id: i as u64 + 1,
                    industry_id: industry as u32 + 1,
                    year,
                    leverage_1917: lev,
                    log_employment_x100: intercept + year_effect[t] + industry_year[industry][t] + effect + noise,
                    interest_share: Some(interest_share),
                    production_share: Some(production_share),
                    size: Some(size),
                    fixed_share: Some(fixed_share),
                    fcf_assets: Some(fcf_assets),
                    margin: Some(margin),
                    tobins_q: Some(tobins_q),
                    ret: None,
                });
            }
            rows
        })
        .collect();
    Ok(firms.into_iter().flatten().collect())
}

/// Bucket of 1-based sorted position `r` among `n` items into `k` buckets.
pub(crate) fn bucket_of(r: usize, n: usize, k: usize) -> usize {
    (r * k).div_ceil(n)
}

/// Draws firm-period returns
/// `r_it = m_t + premium · s_it + ε_it`, where `s_it` is the firm's sorted
/// position on lagged leverage rescaled so that the mean of the top bucket
/// minus the mean of the bottom bucket is exactly one.
pub fn simulate_returns(config: &ReturnsConfig) -> Result<Vec<ReturnObs>, PanelError> {
    config.validate()?;
    let (a, b) = beta_shape(config.leverage_mean, config.leverage_sd)?;
    let leverage = Beta::new(a, b).map_err(|e| PanelError::InvalidConfig { name: "leverage", reason: e.to_string() })?;
    let (n, k, periods) = (config.n_firms, config.n_buckets, config.n_periods);

    let mut common = stream(config.seed, 0);
    let market_dist = Normal::new(config.market_mean, config.market_sd).expect("validated sd");
    let market: Vec<f64> = (0..periods).map(|_| market_dist.sample(&mut common)).collect();

    // Per firm: (leverage path, noise path).
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(config.seed, i as u64 + 1);
            let base: f64 = leverage.sample(&mut rng);
            let mut lev = Vec::with_capacity(periods);
            let mut noise = Vec::with_capacity(periods);
            for _ in 0..periods {
                lev.push((base + normal(config.leverage_drift_sd).sample(&mut rng)).clamp(0.0, 1.0));
                noise.push(normal(config.noise_sd).sample(&mut rng));
            }
            (lev, noise)
        })
        .collect();

    let mean_rank = |bucket: usize| {
        let ranks: Vec<f64> = (1..=n).filter(|&r| bucket_of(r, n, k) == bucket).map(|r| r as f64).collect();
        ranks.iter().sum::<f64>() / ranks.len() as f64
    };
    let (bottom, top) = (mean_rank(1), mean_rank(k));
    let premium = config.annual_premium / config.periods_per_year as f64;

    let mut out = Vec::with_capacity(n * periods);
    for (t, &m) in market.iter().enumerate().take(periods) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| draws[x].0[t].total_cmp(&draws[y].0[t]).then(x.cmp(&y)));
        let mut scaled = vec![0.0; n];
        for (pos, &firm) in order.iter().enumerate() {
            scaled[firm] = (pos as f64 + 1.0 - bottom) / (top - bottom);
        }
        for i in 0..n {
            out.push(ReturnObs {
                firm_id: i as u64 + 1,
                period: t as i32 + 1,
                leverage_lag: draws[i].0[t],
                market_return: m,
                ret: m + premium * scaled[i] + draws[i].1[t],
            });
        }
    }
    Ok(out)
}
