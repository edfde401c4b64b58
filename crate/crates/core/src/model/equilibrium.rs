use super::{FirmAllocation, ModelError, ModelParams};
use crate::numerics::bisect;

/// Slack below zero tolerated on the constraint multiplier before a firm
/// counts as unconstrained.
pub const LAMBDA_TOLERANCE: f64 = 1e-12;

const LABOR_MARGIN: f64 = 1e-9;
const MAX_BISECTIONS: usize = 400;

/// Which nominal wage an equilibrium uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Wage reset to clear the labor market.
    Adjusted,
    /// Wage left at the preset `W0`; labor is read off the demand curve.
    Rigid,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Adjusted => "adjusted",
            Regime::Rigid => "rigid",
        }
    }
}

/// One solved economy at a given price level.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumPoint {
    pub price_level: f64,
    pub nominal_wage: f64,
    pub real_wage: f64,
    pub labor: f64,
    pub output: f64,
    /// Unclamped default cutoff `K0 − D0/P`.
    pub zstar: f64,
    pub default_share: f64,
    pub regime: Regime,
    /// Flexible-wage utility net of the menu cost, when evaluated.
    pub utility_adjust: Option<f64>,
    /// Utility at the preset wage, when evaluated; `-inf` if that allocation
    /// does not exist.
    pub utility_stay: Option<f64>,
    /// Household consumption `w·L + G(Z*)·D0/P`.
    pub consumption: f64,
    /// Constraint multiplier shared by all active firms.
    pub multiplier: f64,
    pub lambda_ok: bool,
    /// `|L^d(w) − L|` at the reported wage.
    pub residual_demand_supply: f64,
    /// Output minus entrepreneur consumption, net investment and household
    /// consumption. Reported only.
    pub resource_residual: f64,
}

impl EquilibriumPoint {
    /// Allocation of a firm with shock `z` in this equilibrium.
    pub fn firm(&self, params: &ModelParams, z: f64) -> Result<FirmAllocation, ModelError> {
        params.firm_allocation(z, self.real_wage, self.price_level)
    }
}

impl ModelParams {
    /// Market-clearing allocation with a fully flexible nominal wage.
    ///
    /// Solves `L^d(w_s(L), P) = L` for `L` in `(0, L_max)` by bisection run
    /// until the bracket collapses. With zero initial debt the supply curve
    /// is vertical at `L_max` and the wage is solved from demand instead.
    pub fn flexible_equilibrium(&self, p: f64) -> Result<EquilibriumPoint, ModelError> {
        let mass = self.active_mass(p)?;
        if mass <= 0.0 {
            return Err(ModelError::NoActiveFirms { p });
        }
        let wealth = self.household_debt_wealth(p)?;
        let net_worth = self.aggregate_net_worth(p)?;
        let floor = self.wage_floor();
        let l_max = self.max_labor();

        let (w, l) = if wealth > 0.0 {
            let excess = |l: f64| {
                let w = self.supply_wage_unchecked(l, wealth);
                if !(w > floor) {
                    return f64::INFINITY;
                }
                let den = self.demand_denominator(w);
                if den <= 0.0 {
                    f64::INFINITY
                } else {
                    net_worth / den - l
                }
            };
            let lo = LABOR_MARGIN.min(0.5 * l_max);
            let hi = l_max - LABOR_MARGIN;
            let l = bisect(lo, hi, 0.0, MAX_BISECTIONS, excess).ok_or(ModelError::NoEquilibrium { p })?.root;
            (self.supply_wage_unchecked(l, wealth), l)
        } else {
            let target = net_worth / l_max;
            let mut hi = floor.max(1e-12) * 2.0;
            while self.demand_denominator(hi) < target {
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(ModelError::NoEquilibrium { p });
                }
            }
            let w = bisect(floor, hi, 0.0, MAX_BISECTIONS, |w| self.demand_denominator(w) - target)
                .ok_or(ModelError::NoEquilibrium { p })?
                .root;
            (w, l_max)
        };

        let multiplier = self.constraint_multiplier(w);
        if multiplier < -LAMBDA_TOLERANCE {
            return Err(ModelError::UnconstrainedFirm { lambda: multiplier, w, ceiling: self.constrained_wage_ceiling() });
        }
        let (u, _) = self.worker_utility(w, l, p)?;
        let mut point = self.assemble(p, w, l, Regime::Adjusted)?;
        point.utility_adjust = Some(u - self.psi);
        Ok(point)
    }

    /// Allocation when the nominal wage stays at `w0` and labor is whatever
    /// firms demand at the real wage `w0/P`.
    pub fn rigid_allocation(&self, p: f64, w0: f64) -> Result<EquilibriumPoint, ModelError> {
        if !(p.is_finite() && p > 0.0) {
            return Err(ModelError::NonPositivePrice(p));
        }
        let w = w0 / p;
        let l = self.aggregate_labor_demand(w, p)?;
        let (u, _) = self.worker_utility(w, l, p)?;
        let mut point = self.assemble(p, w, l, Regime::Rigid)?;
        point.utility_stay = Some(u);
        Ok(point)
    }

    /// Households keep `W0` unless the flexible allocation net of the menu
    /// cost `ψ` gives strictly higher utility.
    pub fn menu_cost_equilibrium(&self, p: f64) -> Result<EquilibriumPoint, ModelError> {
        let flexible = self.flexible_equilibrium(p)?;
        let utility_adjust = flexible.utility_adjust.expect("flexible solve records utility");
        let rigid = match self.rigid_allocation(p, self.w0) {
            Ok(point) => Some(point),
            Err(ModelError::OutsideDemandRegion { .. } | ModelError::NonPositiveConsumption(_)) => None,
            Err(e) => return Err(e),
        };
        let utility_stay = rigid.as_ref().and_then(|r| r.utility_stay).unwrap_or(f64::NEG_INFINITY);
        let mut chosen = match rigid {
            Some(r) if utility_adjust <= utility_stay => r,
            _ => flexible,
        };
        chosen.utility_adjust = Some(utility_adjust);
        chosen.utility_stay = Some(utility_stay);
        Ok(chosen)
    }

    fn assemble(&self, p: f64, w: f64, l: f64, regime: Regime) -> Result<EquilibriumPoint, ModelError> {
        let cut = self.default_cutoff(p)?;
        let mass = self.shocks.cdf(cut.raw);
        let k = self.capital_labor_ratio(w)?;
        let output = self.tfp * k.powf(self.alpha) * l;
        let (_, consumption) = self.worker_utility(w, l, p)?;
        let multiplier = self.constraint_multiplier(w);
        let demand = self.aggregate_labor_demand(w, p)?;
        let entrepreneurs = (1.0 - self.xi) * output;
        let investment = k * l - mass * self.k0;
        Ok(EquilibriumPoint {
            price_level: p,
            nominal_wage: w * p,
            real_wage: w,
            labor: l,
            output,
            zstar: cut.raw,
            default_share: 1.0 - mass,
            regime,
            utility_adjust: None,
            utility_stay: None,
            consumption,
            multiplier,
            lambda_ok: multiplier >= -LAMBDA_TOLERANCE,
            residual_demand_supply: (demand - l).abs(),
            resource_residual: output - (entrepreneurs + investment + consumption),
        })
    }
}
