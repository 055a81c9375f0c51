//! Physical parameters of the model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five physical parameters.
///
/// `alpha` is the angiogenesis (Robin) coefficient, `sigma_bar` the external
/// nutrient level, `sigma_tilde` the proliferation threshold, `mu` the
/// aggressiveness and `tau` the proliferation delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub alpha: f64,
    pub sigma_bar: f64,
    pub sigma_tilde: f64,
    pub mu: f64,
    pub tau: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            sigma_bar: 1.0,
            sigma_tilde: 0.5,
            mu: 1.0,
            tau: 0.0,
        }
    }
}

impl ModelParams {
    pub fn new(alpha: f64, sigma_bar: f64, sigma_tilde: f64, mu: f64, tau: f64) -> Result<Self> {
        let p = Self {
            alpha,
            sigma_bar,
            sigma_tilde,
            mu,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_tau(self, tau: f64) -> Self {
        Self { tau, ..self }
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// Checks every invariant. The nutrient ordering is reported as
    /// [`Error::NoStationaryRadius`] since that is its only consequence.
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("alpha", self.alpha),
            ("sigma_bar", self.sigma_bar),
            ("sigma_tilde", self.sigma_tilde),
            ("mu", self.mu),
            ("tau", self.tau),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in &named[..4] {
            if *v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tau < 0.0 {
            return Err(Error::InvalidParams(format!(
                "tau must be nonnegative, got {}",
                self.tau
            )));
        }
        if self.sigma_tilde >= self.sigma_bar {
            return Err(Error::NoStationaryRadius(format!(
                "requires sigma_tilde < sigma_bar, got sigma_tilde = {} and sigma_bar = {}",
                self.sigma_tilde, self.sigma_bar
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        assert!(ModelParams::default().validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(matches!(
            ModelParams::new(0.0, 1.0, 0.5, 1.0, 0.0),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ModelParams::new(1.0, 1.0, 0.5, 1.0, -0.1),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ModelParams::new(1.0, 1.0, f64::NAN, 1.0, 0.0),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ModelParams::new(1.0, 1.0, 1.0, 1.0, 0.0),
            Err(Error::NoStationaryRadius(_))
        ));
    }
}
