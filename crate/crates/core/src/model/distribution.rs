use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::ModelError;
use crate::numerics;

const QUADRATURE_TOL: f64 = 1e-10;

/// Shape of the idiosyncratic capital-shock distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShockFamily {
    Uniform,
    /// Normal(mean, sd) truncated to the support.
    TruncatedNormal { mean: f64, sd: f64 },
}

/// Distribution `G` of the real capital shock `Z` on `[z_lo, z_hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockDistribution {
    family: ShockFamily,
    z_lo: f64,
    z_hi: f64,
    // Cached Φ at the standardized bounds for the truncated normal.
    mass_lo: f64,
    mass_hi: f64,
}

impl ShockDistribution {
    pub fn uniform(z_lo: f64, z_hi: f64) -> Result<Self, ModelError> {
        Self::new(ShockFamily::Uniform, z_lo, z_hi)
    }

    pub fn truncated_normal(mean: f64, sd: f64, z_lo: f64, z_hi: f64) -> Result<Self, ModelError> {
        Self::new(ShockFamily::TruncatedNormal { mean, sd }, z_lo, z_hi)
    }

    pub fn new(family: ShockFamily, z_lo: f64, z_hi: f64) -> Result<Self, ModelError> {
        if !(z_lo.is_finite() && z_hi.is_finite() && z_lo < z_hi) {
            return Err(ModelError::invalid("shock support", z_hi - z_lo, "requires finite z_lo < z_hi"));
        }
        let (mass_lo, mass_hi) = match family {
            ShockFamily::Uniform => (0.0, 1.0),
            ShockFamily::TruncatedNormal { mean, sd } => {
                if !(sd.is_finite() && sd > 0.0) {
                    return Err(ModelError::invalid("shock_sd", sd, "must be positive"));
                }
                if !mean.is_finite() {
                    return Err(ModelError::invalid("shock_mean", mean, "must be finite"));
                }
                let lo = std_normal().cdf((z_lo - mean) / sd);
                let hi = std_normal().cdf((z_hi - mean) / sd);
                if hi - lo <= 1e-300 {
                    return Err(ModelError::invalid("shock support", z_hi - z_lo, "carries no normal mass"));
                }
                (lo, hi)
            }
        };
        Ok(Self { family, z_lo, z_hi, mass_lo, mass_hi })
    }

    pub fn family(&self) -> ShockFamily {
        self.family
    }

    pub fn z_lo(&self) -> f64 {
        self.z_lo
    }

    pub fn z_hi(&self) -> f64 {
        self.z_hi
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if z <= self.z_lo {
            return 0.0;
        }
        if z >= self.z_hi {
            return 1.0;
        }
        match self.family {
            ShockFamily::Uniform => (z - self.z_lo) / (self.z_hi - self.z_lo),
            ShockFamily::TruncatedNormal { mean, sd } => {
                let v = (std_normal().cdf((z - mean) / sd) - self.mass_lo) / (self.mass_hi - self.mass_lo);
                v.clamp(0.0, 1.0)
            }
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if z < self.z_lo || z > self.z_hi {
            return 0.0;
        }
        match self.family {
            ShockFamily::Uniform => 1.0 / (self.z_hi - self.z_lo),
            ShockFamily::TruncatedNormal { mean, sd } => {
                std_normal().pdf((z - mean) / sd) / (sd * (self.mass_hi - self.mass_lo))
            }
        }
    }

    /// Inverse CDF on `(0, 1)`; endpoints map to the support bounds.
    pub fn quantile(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return self.z_lo;
        }
        if u >= 1.0 {
            return self.z_hi;
        }
        match self.family {
            ShockFamily::Uniform => self.z_lo + u * (self.z_hi - self.z_lo),
            ShockFamily::TruncatedNormal { mean, sd } => {
                let target = self.mass_lo + u * (self.mass_hi - self.mass_lo);
                (mean + sd * std_normal().inverse_cdf(target)).clamp(self.z_lo, self.z_hi)
            }
        }
    }

    /// Partial first moment `∫_{z_lo}^{z} x dG(x)`, with `z` clamped to the support.
    pub fn partial_mean(&self, z: f64) -> f64 {
        let upper = z.clamp(self.z_lo, self.z_hi);
        match self.family {
            ShockFamily::Uniform => (upper * upper - self.z_lo * self.z_lo) / (2.0 * (self.z_hi - self.z_lo)),
            ShockFamily::TruncatedNormal { .. } => {
                numerics::integrate(|x| x * self.pdf(x), self.z_lo, upper, QUADRATURE_TOL)
            }
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}
