//! Firm problem, default cutoff and household labor supply.
//!
//! All firms share the capital-labor ratio `K/L = α/(1−α)·w`, so under a
//! binding working-capital constraint labor demand is linear in the firm's
//! initial real net worth `K0 − D0/P − Z` divided by a wage-dependent
//! denominator that must stay positive.

use super::{ModelError, ModelParams};

/// The default cutoff `Z* = K0 − D0/P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub raw: f64,
    /// `raw` clamped to the shock support, used for CDF evaluation.
    pub clamped: f64,
}

/// One firm's choices at a given real wage and price level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmAllocation {
    pub z: f64,
    pub active: bool,
    pub capital: f64,
    pub labor: f64,
    /// Entrepreneur value from continuing, in real terms.
    pub value: f64,
    /// Nominal intra-period debt `ξ·P·Y` when the constraint binds.
    pub debt: f64,
}

fn positive_price(p: f64) -> Result<(), ModelError> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(ModelError::NonPositivePrice(p))
    }
}

impl ModelParams {
    pub fn default_cutoff(&self, p: f64) -> Result<Cutoff, ModelError> {
        positive_price(p)?;
        let raw = self.k0 - self.d0 / p;
        Ok(Cutoff { raw, clamped: raw.clamp(self.shocks.z_lo(), self.shocks.z_hi()) })
    }

    /// Share of firms that default, `1 − G(Z*)`.
    pub fn default_share(&self, p: f64) -> Result<f64, ModelError> {
        let cut = self.default_cutoff(p)?;
        Ok(1.0 - self.shocks.cdf(cut.raw))
    }

    /// Analytic slope `−(D0/P²)·g(Z*)` of the default share in `P`.
    pub fn default_share_slope(&self, p: f64) -> Result<f64, ModelError> {
        let cut = self.default_cutoff(p)?;
        Ok(-(self.d0 / (p * p)) * self.shocks.pdf(cut.raw))
    }

    /// Mass of active firms `G(Z*)`.
    pub fn active_mass(&self, p: f64) -> Result<f64, ModelError> {
        Ok(self.shocks.cdf(self.default_cutoff(p)?.raw))
    }

    /// Households' real debt wealth `G(Z*)·D0/P`.
    pub fn household_debt_wealth(&self, p: f64) -> Result<f64, ModelError> {
        Ok(self.active_mass(p)? * self.d0 / p)
    }

    pub fn capital_labor_ratio(&self, w: f64) -> Result<f64, ModelError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ModelError::NonPositiveWage(w));
        }
        Ok(self.alpha / (1.0 - self.alpha) * w)
    }

    /// `w/(1−α) − ξ·A·(α/(1−α)·w)^α`: real resources needed per unit of
    /// labor beyond what the pledgeable output finances.
    pub fn demand_denominator(&self, w: f64) -> f64 {
        let k = self.alpha / (1.0 - self.alpha) * w;
        w / (1.0 - self.alpha) - self.xi * self.tfp * k.powf(self.alpha)
    }

    /// Lowest real wage of the labor-demand validity region; the
    /// denominator is positive exactly for `w` above it.
    pub fn wage_floor(&self) -> f64 {
        let a = self.alpha;
        let k = (a * self.xi * self.tfp).powf(1.0 / (1.0 - a));
        k * (1.0 - a) / a
    }

    /// Real wage at which the marginal product of capital equals one;
    /// the working-capital constraint binds only at or below it.
    pub fn constrained_wage_ceiling(&self) -> f64 {
        let a = self.alpha;
        let k = (a * self.tfp).powf(1.0 / (1.0 - a));
        k * (1.0 - a) / a
    }

    /// Multiplier on the working-capital constraint implied by the
    /// first-order condition for capital, `(F_K − 1)/(1 − ξ·F_K)`.
    ///
    /// `F_K` depends only on the capital-labor ratio, so the value is common
    /// to every active firm at a given real wage.
    pub fn constraint_multiplier(&self, w: f64) -> f64 {
        let k = self.alpha / (1.0 - self.alpha) * w;
        let f_k = self.alpha * self.tfp * k.powf(self.alpha - 1.0);
        (f_k - 1.0) / (1.0 - self.xi * f_k)
    }

    fn checked_denominator(&self, w: f64) -> Result<f64, ModelError> {
        if !(w.is_finite() && w > 0.0) {
            return Err(ModelError::NonPositiveWage(w));
        }
        let den = self.demand_denominator(w);
        if den > 0.0 {
            Ok(den)
        } else {
            Err(ModelError::OutsideDemandRegion { w, floor: self.wage_floor() })
        }
    }

    /// Labor demand of a firm with shock `z`; zero at and above the cutoff.
    pub fn firm_labor_demand(&self, z: f64, w: f64, p: f64) -> Result<f64, ModelError> {
        positive_price(p)?;
        let den = self.checked_denominator(w)?;
        let net_worth = self.k0 - self.d0 / p - z;
        Ok(if net_worth > 0.0 { net_worth / den } else { 0.0 })
    }

    /// Aggregate labor demand `(G(Z*)·(K0 − D0/P) − ∫^{Z*} z dG)/den(w)`.
    pub fn aggregate_labor_demand(&self, w: f64, p: f64) -> Result<f64, ModelError> {
        positive_price(p)?;
        let den = self.checked_denominator(w)?;
        Ok(self.aggregate_net_worth(p)? / den)
    }

    /// Numerator of aggregate labor demand: total real net worth of active firms.
    pub fn aggregate_net_worth(&self, p: f64) -> Result<f64, ModelError> {
        let cut = self.default_cutoff(p)?;
        let mass = self.shocks.cdf(cut.raw);
        let numerator = mass * (self.k0 - self.d0 / p) - self.shocks.partial_mean(cut.raw);
        Ok(numerator.max(0.0))
    }

    /// Upper bound on household labor, where the supply denominator vanishes.
    pub fn max_labor(&self) -> f64 {
        (1.0 / self.wage_markup_chi()).powf(1.0 / (1.0 + self.varphi))
    }

    fn wage_markup_chi(&self) -> f64 {
        self.epsilon / (self.epsilon - 1.0) * self.chi
    }

    /// Real wage on the household labor-supply curve at aggregate labor `l`.
    ///
    /// With zero household debt wealth the curve is vertical at
    /// [`max_labor`](Self::max_labor) and this returns
    /// [`ModelError::InelasticSupply`].
    pub fn labor_supply_wage(&self, l: f64, p: f64) -> Result<f64, ModelError> {
        positive_price(p)?;
        let l_max = self.max_labor();
        if !(l.is_finite() && l > 0.0) || l >= l_max {
            return Err(ModelError::LaborOutsideSupplyRange { l, l_max });
        }
        let wealth = self.household_debt_wealth(p)?;
        if wealth <= 0.0 {
            return Err(ModelError::InelasticSupply { l_max });
        }
        Ok(self.supply_wage_unchecked(l, wealth))
    }

    pub(super) fn supply_wage_unchecked(&self, l: f64, wealth: f64) -> f64 {
        let m = self.wage_markup_chi();
        m * l.powf(self.varphi) / (1.0 - m * l.powf(1.0 + self.varphi)) * wealth
    }

    pub fn firm_allocation(&self, z: f64, w: f64, p: f64) -> Result<FirmAllocation, ModelError> {
        let labor = self.firm_labor_demand(z, w, p)?;
        if labor <= 0.0 {
            return Ok(FirmAllocation { z, active: false, capital: 0.0, labor: 0.0, value: 0.0, debt: 0.0 });
        }
        let capital = self.capital_labor_ratio(w)? * labor;
        let output = self.tfp * capital.powf(self.alpha) * labor.powf(1.0 - self.alpha);
        Ok(FirmAllocation {
            z,
            active: true,
            capital,
            labor,
            value: (1.0 - self.xi) * output,
            debt: self.xi * p * output,
        })
    }

    /// Entrepreneur value `(1−ξ)·A·K^α·L^{1−α}`; zero for defaulting firms.
    pub fn firm_value(&self, z: f64, w: f64, p: f64) -> Result<f64, ModelError> {
        Ok(self.firm_allocation(z, w, p)?.value)
    }

    /// Closed form `(1−ξ)·A·(α/(1−α)·w)^α·L` of the same value.
    pub fn firm_value_from_labor(&self, w: f64, labor: f64) -> Result<f64, ModelError> {
        let k = self.capital_labor_ratio(w)?;
        Ok((1.0 - self.xi) * self.tfp * k.powf(self.alpha) * labor)
    }

    /// Household utility `ln C − χ·L^{1+φ}/(1+φ)` with `C = w·L + G(Z*)·D0/P`.
    pub fn worker_utility(&self, w: f64, l: f64, p: f64) -> Result<(f64, f64), ModelError> {
        let consumption = w * l + self.household_debt_wealth(p)?;
        if !(consumption > 0.0) {
            return Err(ModelError::NonPositiveConsumption(consumption));
        }
        let u = consumption.ln() - self.chi * l.powf(1.0 + self.varphi) / (1.0 + self.varphi);
        Ok((u, consumption))
    }
}
