use std::path::Path;

use super::distribution::{ShockDistribution, ShockFamily};
use super::ModelError;

/// The shipped default calibration, as a key=value config file.
pub const DEFAULT_CONFIG: &str = include_str!("../../config/default.cfg");

/// How the preset nominal wage `W0` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WageAnchor {
    /// `W0` equals the flexible-equilibrium nominal wage at `P = 1`.
    FlexibleAtUnitPrice,
    Fixed(f64),
}

/// Shock family as written in a calibration; support defaults to `[0, K0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShockSpec {
    Uniform { z_lo: Option<f64>, z_hi: Option<f64> },
    TruncatedNormal { mean: f64, sd: f64, z_lo: Option<f64>, z_hi: Option<f64> },
}

/// Unvalidated parameter set. `Default` is the shipped calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub alpha: f64,
    pub tfp: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub chi: f64,
    pub varphi: f64,
    pub psi: f64,
    pub k0: f64,
    pub d0: f64,
    pub w0: WageAnchor,
    pub shock: ShockSpec,
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            tfp: 1.0,
            xi: 0.05,
            epsilon: 2.0,
            chi: 0.01,
            varphi: 1.0,
            psi: 0.01,
            k0: 4.0,
            d0: 1.0,
            w0: WageAnchor::FlexibleAtUnitPrice,
            shock: ShockSpec::Uniform { z_lo: None, z_hi: None },
        }
    }
}

impl ParamSpec {
    /// Parses a flat `key = value` calibration. Keys not given keep their
    /// default values; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self, ModelError> {
        let mut spec = ParamSpec::default();
        let mut family: Option<String> = None;
        let (mut z_lo, mut z_hi, mut mean, mut sd) = (None, None, None, None);

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ModelError::Config {
                line: line_no,
                message: format!("expected key=value, found {line:?}"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim();
            let number = || -> Result<f64, ModelError> {
                value.parse::<f64>().map_err(|_| ModelError::Config {
                    line: line_no,
                    message: format!("{key}: cannot parse {value:?} as a number"),
                })
            };
            match key.as_str() {
                "alpha" => spec.alpha = number()?,
                "tfp" | "a" => spec.tfp = number()?,
                "xi" => spec.xi = number()?,
                "epsilon" => spec.epsilon = number()?,
                "chi" => spec.chi = number()?,
                "varphi" | "phi" => spec.varphi = number()?,
                "psi" => spec.psi = number()?,
                "k0" => spec.k0 = number()?,
                "d0" => spec.d0 = number()?,
                "w0" => {
                    spec.w0 = if value.eq_ignore_ascii_case("flex") {
                        WageAnchor::FlexibleAtUnitPrice
                    } else {
                        WageAnchor::Fixed(number()?)
                    }
                }
                "shock" => family = Some(value.to_ascii_lowercase()),
                "z_lo" => z_lo = Some(number()?),
                "z_hi" => z_hi = Some(number()?),
                "shock_mean" => mean = Some(number()?),
                "shock_sd" => sd = Some(number()?),
                _ => {
                    return Err(ModelError::Config { line: line_no, message: format!("unknown key {key:?}") });
                }
            }
        }

        spec.shock = match family.as_deref().unwrap_or("uniform") {
            "uniform" => ShockSpec::Uniform { z_lo, z_hi },
            "truncnormal" | "truncated-normal" | "truncated_normal" => ShockSpec::TruncatedNormal {
                mean: mean.ok_or_else(|| ModelError::Config { line: 0, message: "truncnormal needs shock_mean".into() })?,
                sd: sd.ok_or_else(|| ModelError::Config { line: 0, message: "truncnormal needs shock_sd".into() })?,
                z_lo,
                z_hi,
            },
            other => {
                return Err(ModelError::Config { line: 0, message: format!("unknown shock family {other:?}") });
            }
        };
        Ok(spec)
    }

    pub fn build(self) -> Result<ModelParams, ModelError> {
        ModelParams::new(self)
    }
}

/// Validated model primitives.
///
/// Construct through [`ModelParams::new`], [`ModelParams::from_config_str`]
/// or [`ModelParams::default_calibration`]; every bound is checked once at
/// construction and the struct is immutable afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub(super) alpha: f64,
    pub(super) tfp: f64,
    pub(super) xi: f64,
    pub(super) epsilon: f64,
    pub(super) chi: f64,
    pub(super) varphi: f64,
    pub(super) psi: f64,
    pub(super) k0: f64,
    pub(super) d0: f64,
    pub(super) w0: f64,
    pub(super) shocks: ShockDistribution,
}

fn check(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), ModelError> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(ModelError::invalid(name, value, reason))
    }
}

impl ModelParams {
    pub fn new(spec: ParamSpec) -> Result<Self, ModelError> {
        check("alpha", spec.alpha, spec.alpha > 0.0 && spec.alpha < 1.0, "must lie in (0, 1)")?;
        check("tfp", spec.tfp, spec.tfp > 0.0, "must be positive")?;
        check("xi", spec.xi, spec.xi > 0.0 && spec.xi < 1.0, "must lie in (0, 1)")?;
        check("epsilon", spec.epsilon, spec.epsilon > 1.0, "must exceed 1")?;
        check("chi", spec.chi, spec.chi > 0.0, "must be positive")?;
        check("varphi", spec.varphi, spec.varphi >= 0.0, "must be nonnegative")?;
        check("psi", spec.psi, spec.psi >= 0.0, "must be nonnegative")?;
        check("k0", spec.k0, spec.k0 > 0.0, "must be positive")?;
        check("d0", spec.d0, spec.d0 >= 0.0, "must be nonnegative")?;

        let shocks = match spec.shock {
            ShockSpec::Uniform { z_lo, z_hi } => {
                ShockDistribution::new(ShockFamily::Uniform, z_lo.unwrap_or(0.0), z_hi.unwrap_or(spec.k0))?
            }
            ShockSpec::TruncatedNormal { mean, sd, z_lo, z_hi } => ShockDistribution::new(
                ShockFamily::TruncatedNormal { mean, sd },
                z_lo.unwrap_or(0.0),
                z_hi.unwrap_or(spec.k0),
            )?,
        };

        let mut params = Self {
            alpha: spec.alpha,
            tfp: spec.tfp,
            xi: spec.xi,
            epsilon: spec.epsilon,
            chi: spec.chi,
            varphi: spec.varphi,
            psi: spec.psi,
            k0: spec.k0,
            d0: spec.d0,
            w0: f64::NAN,
            shocks,
        };
        params.w0 = match spec.w0 {
            WageAnchor::Fixed(w0) => {
                check("w0", w0, w0 > 0.0, "must be positive")?;
                w0
            }
            WageAnchor::FlexibleAtUnitPrice => params.flexible_equilibrium(1.0)?.nominal_wage,
        };
        Ok(params)
    }

    pub fn default_calibration() -> Self {
        Self::from_config_str(DEFAULT_CONFIG).expect("shipped calibration is valid")
    }

    pub fn from_config_str(text: &str) -> Result<Self, ModelError> {
        ParamSpec::parse(text)?.build()
    }

    pub fn from_config_file(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| ModelError::Config { line: 0, message: format!("{}: {e}", path.as_ref().display()) })?;
        Self::from_config_str(&text)
    }

    /// Same primitives with a different initial debt; `W0` is kept.
    pub fn with_d0(&self, d0: f64) -> Result<Self, ModelError> {
        check("d0", d0, d0 >= 0.0, "must be nonnegative")?;
        Ok(Self { d0, ..self.clone() })
    }

    pub fn with_psi(&self, psi: f64) -> Result<Self, ModelError> {
        check("psi", psi, psi >= 0.0, "must be nonnegative")?;
        Ok(Self { psi, ..self.clone() })
    }

    pub fn with_w0(&self, w0: f64) -> Result<Self, ModelError> {
        check("w0", w0, w0 > 0.0, "must be positive")?;
        Ok(Self { w0, ..self.clone() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn tfp(&self) -> f64 {
        self.tfp
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn chi(&self) -> f64 {
        self.chi
    }
    pub fn varphi(&self) -> f64 {
        self.varphi
    }
    pub fn psi(&self) -> f64 {
        self.psi
    }
    pub fn k0(&self) -> f64 {
        self.k0
    }
    pub fn d0(&self) -> f64 {
        self.d0
    }
    pub fn w0(&self) -> f64 {
        self.w0
    }
    pub fn shocks(&self) -> &ShockDistribution {
        &self.shocks
    }

    /// Renders the parameters back to config syntax (W0 written as a number).
    pub fn to_config_string(&self) -> String {
        let mut out = format!(
            "alpha = {}\ntfp = {}\nxi = {}\nepsilon = {}\nchi = {}\nvarphi = {}\npsi = {}\nk0 = {}\nd0 = {}\nw0 = {}\n",
            self.alpha, self.tfp, self.xi, self.epsilon, self.chi, self.varphi, self.psi, self.k0, self.d0, self.w0
        );
        match self.shocks.family() {
            ShockFamily::Uniform => out.push_str("shock = uniform\n"),
            ShockFamily::TruncatedNormal { mean, sd } => {
                out.push_str(&format!("shock = truncnormal\nshock_mean = {mean}\nshock_sd = {sd}\n"))
            }
        }
        out.push_str(&format!("z_lo = {}\nz_hi = {}\n", self.shocks.z_lo(), self.shocks.z_hi()));
        out
    }
}
