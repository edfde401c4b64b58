use std::collections::BTreeMap;

use super::PanelError;

/// How leverage moves log employment in a simulated panel.
#[derive(Debug, Clone, PartialEq)]
pub enum PanelEffect {
    /// `beta · leverage · 1{year ≥ event_year}`.
    PostEvent { beta: f64 },
    /// `contemporaneous · DI_t + lagged · DI_{t−1}`, where `DI_t` is the
    /// debt-inflation shock from the base-year price level.
    ShockLoading { contemporaneous: f64, lagged: f64, base_year: i32, price_levels: BTreeMap<i32, f64> },
}

/// Settings for [`simulate_panel`](super::simulate_panel).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelConfig {
    pub n_firms: usize,
    pub first_year: i32,
    pub last_year: i32,
    pub event_year: i32,
    pub effect: PanelEffect,
    pub leverage_mean: f64,
    pub leverage_sd: f64,
    /// Mean of the firm intercepts in log-employment points.
    pub employment_level: f64,
    pub firm_effect_sd: f64,
    pub year_effect_sd: f64,
    pub n_industries: usize,
    pub industry_year_sd: f64,
    pub noise_sd: f64,
    /// Probability that a firm-year is missing.
    pub gap_prob: f64,
    pub seed: u64,
}

impl PanelConfig {
    /// 1914–1923 panel with event year 1920 and leverage moments 0.43/0.18.
    pub fn new(n_firms: usize, beta: f64, seed: u64) -> Self {
        Self {
            n_firms,
            first_year: 1914,
            last_year: 1923,
            event_year: 1920,
            effect: PanelEffect::PostEvent { beta },
            leverage_mean: 0.43,
            leverage_sd: 0.18,
            employment_level: 500.0,
            firm_effect_sd: 100.0,
            year_effect_sd: 10.0,
            n_industries: 10,
            industry_year_sd: 5.0,
            noise_sd: 15.0,
            gap_prob: 0.0,
            seed,
        }
    }

    /// Same panel with every stochastic shock except leverage and firm
    /// intercepts switched off.
    pub fn noiseless(mut self) -> Self {
        self.noise_sd = 0.0;
        self.industry_year_sd = 0.0;
        self.gap_prob = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), PanelError> {
        let bad = |name: &'static str, reason: &str| Err(PanelError::InvalidConfig { name, reason: reason.into() });
        if self.n_firms < 2 {
            return bad("n_firms", "need at least 2 firms");
        }
        if self.first_year > self.last_year {
            return bad("years", "first_year after last_year");
        }
        if !(self.first_year..=self.last_year).contains(&self.event_year) {
            return bad("event_year", "outside the year range");
        }
        if self.n_industries == 0 {
            return bad("n_industries", "must be positive");
        }
        for (name, sd) in [
            ("firm_effect_sd", self.firm_effect_sd),
            ("year_effect_sd", self.year_effect_sd),
            ("industry_year_sd", self.industry_year_sd),
            ("noise_sd", self.noise_sd),
        ] {
            if !(sd >= 0.0 && sd.is_finite()) {
                return bad(name, "must be a nonnegative number");
            }
        }
        if !(0.0..1.0).contains(&self.gap_prob) {
            return bad("gap_prob", "must lie in [0, 1)");
        }
        beta_shape(self.leverage_mean, self.leverage_sd)?;
        if let PanelEffect::ShockLoading { base_year, price_levels, .. } = &self.effect {
            if !price_levels.contains_key(base_year) {
                return bad("price_levels", "base year missing");
            }
            for year in (self.first_year - 1)..=self.last_year {
                match price_levels.get(&year) {
                    Some(p) if *p > 0.0 => {}
                    _ => return bad("price_levels", &format!("need a positive level for {year}")),
                }
            }
        }
        Ok(())
    }

    /// Parses `key = value` lines; unknown keys are rejected. The seed is not
    /// read from the file.
    pub fn parse(text: &str, seed: u64) -> Result<Self, PanelError> {
        let mut cfg = PanelConfig::new(700, 41.6, seed);
        let mut beta = 41.6;
        let mut dgp = "did".to_string();
        let (mut contemporaneous, mut lagged, mut base_year) = (0.0, 0.0, 1917);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| PanelError::Config { line, message: format!("expected key=value, found {content:?}") })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| PanelError::Config { line, message: format!("{key}: {value:?} is not a number") });
            let int = || value.parse::<i64>().map_err(|_| PanelError::Config { line, message: format!("{key}: {value:?} is not an integer") });
            match key.as_str() {
                "n_firms" => cfg.n_firms = int()?.max(0) as usize,
                "first_year" => cfg.first_year = int()? as i32,
                "last_year" => cfg.last_year = int()? as i32,
                "event_year" => cfg.event_year = int()? as i32,
                "beta" | "beta_true" => beta = num()?,
                "dgp" => dgp = value.to_ascii_lowercase(),
                "shock_contemporaneous" => contemporaneous = num()?,
                "shock_lagged" => lagged = num()?,
                "shock_base_year" => base_year = int()? as i32,
                "leverage_mean" => cfg.leverage_mean = num()?,
                "leverage_sd" => cfg.leverage_sd = num()?,
                "employment_level" => cfg.employment_level = num()?,
                "firm_effect_sd" => cfg.firm_effect_sd = num()?,
                "year_effect_sd" => cfg.year_effect_sd = num()?,
                "n_industries" => cfg.n_industries = int()?.max(0) as usize,
                "industry_year_sd" => cfg.industry_year_sd = num()?,
                "noise_sd" => cfg.noise_sd = num()?,
                "gap_prob" => cfg.gap_prob = num()?,
                _ => return Err(PanelError::Config { line, message: format!("unknown key {key:?}") }),
            }
        }
        cfg.effect = match dgp.as_str() {
            "did" | "post" => PanelEffect::PostEvent { beta },
            "shock" => PanelEffect::ShockLoading {
                contemporaneous,
                lagged,
                base_year,
                price_levels: super::stylized_price_levels(cfg.first_year - 1, cfg.last_year),
            },
            other => return Err(PanelError::Config { line: 0, message: format!("unknown dgp {other:?}") }),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Beta-distribution shape parameters `(a, b)` with the given mean and sd.
pub fn beta_shape(mean: f64, sd: f64) -> Result<(f64, f64), PanelError> {
    let var = sd * sd;
    if !(mean > 0.0 && mean < 1.0 && sd > 0.0 && var < mean * (1.0 - mean)) {
        return Err(PanelError::InvalidConfig {
            name: "leverage",
            reason: format!("no beta distribution has mean {mean} and sd {sd}"),
        });
    }
    let common = mean * (1.0 - mean) / var - 1.0;
    Ok((mean * common, (1.0 - mean) * common))
}

/// Settings for [`simulate_returns`](super::simulate_returns).
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsConfig {
    pub n_firms: usize,
    pub n_periods: usize,
    pub periods_per_year: usize,
    /// Planted annual top-minus-bottom quintile return spread.
    pub annual_premium: f64,
    pub n_buckets: usize,
    pub market_mean: f64,
    pub market_sd: f64,
    /// Per-period idiosyncratic return sd.
    pub noise_sd: f64,
    pub leverage_mean: f64,
    pub leverage_sd: f64,
    /// Per-period sd of the leverage drift around each firm's base level.
    pub leverage_drift_sd: f64,
    pub seed: u64,
}

impl ReturnsConfig {
    /// 700 firms, 60 monthly periods, 10% annual premium, 2% monthly noise.
    pub fn new(seed: u64) -> Self {
        Self {
            n_firms: 700,
            n_periods: 60,
            periods_per_year: 12,
            annual_premium: 0.10,
            n_buckets: 5,
            market_mean: 0.005,
            market_sd: 0.04,
            noise_sd: 0.02,
            leverage_mean: 0.43,
            leverage_sd: 0.18,
            leverage_drift_sd: 0.02,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), PanelError> {
        let bad = |name: &'static str, reason: &str| Err(PanelError::InvalidConfig { name, reason: reason.into() });
        if self.n_buckets < 2 {
            return bad("n_buckets", "need at least 2 buckets");
        }
        if self.n_firms < self.n_buckets {
            return bad("n_firms", "fewer firms than buckets");
        }
        if self.n_periods == 0 || self.periods_per_year == 0 {
            return bad("n_periods", "must be positive");
        }
        for (name, v) in [("market_sd", self.market_sd), ("noise_sd", self.noise_sd), ("leverage_drift_sd", self.leverage_drift_sd)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(name, "must be a nonnegative number");
            }
        }
        if !self.annual_premium.is_finite() {
            return bad("annual_premium", "must be finite");
        }
        beta_shape(self.leverage_mean, self.leverage_sd)?;
        Ok(())
    }

    /// Parses `key = value` lines; the seed is supplied separately.
    pub fn parse(text: &str, seed: u64) -> Result<Self, PanelError> {
        let mut cfg = ReturnsConfig::new(seed);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| PanelError::Config { line, message: format!("expected key=value, found {content:?}") })?;
            let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
            let num = || value.parse::<f64>().map_err(|_| PanelError::Config { line, message: format!("{key}: {value:?} is not a number") });
            let int = || value.parse::<usize>().map_err(|_| PanelError::Config { line, message: format!("{key}: {value:?} is not a count") });
            match key.as_str() {
                "n_firms" => cfg.n_firms = int()?,
                "n_periods" => cfg.n_periods = int()?,
                "periods_per_year" => cfg.periods_per_year = int()?,
                "annual_premium" => cfg.annual_premium = num()?,
                "n_buckets" => cfg.n_buckets = int()?,
                "market_mean" => cfg.market_mean = num()?,
                "market_sd" => cfg.market_sd = num()?,
                "noise_sd" => cfg.noise_sd = num()?,
                "leverage_mean" => cfg.leverage_mean = num()?,
                "leverage_sd" => cfg.leverage_sd = num()?,
                "leverage_drift_sd" => cfg.leverage_drift_sd = num()?,
                _ => return Err(PanelError::Config { line, message: format!("unknown key {key:?}") }),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
