use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Numerical thresholds shared by every rank decision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    /// Relative singular-value cutoff, scaled by the larger matrix dimension.
    pub eps_rel: f64,
    /// Smallest acceptable separation (rank margins, eigenvalue gaps).
    pub gap_min: f64,
    /// Default number of interior samples used when verifying a path.
    pub path_samples_default: usize,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            eps_rel: 1e-10,
            gap_min: 1e-6,
            path_samples_default: 64,
        }
    }
}

impl TolerancePolicy {
    pub fn new(eps_rel: f64, gap_min: f64, path_samples_default: usize) -> Result<Self> {
        let policy = Self {
            eps_rel,
            gap_min,
            path_samples_default,
        };
        policy.validate()?;
        Ok(policy)
    }

    /// Cutoff at working precision, used to confirm that constructed
    /// rank-one curves are rank one up to rounding.
    pub fn machine() -> Self {
        Self {
            eps_rel: 8.0 * f64::EPSILON,
            ..Self::default()
        }
    }

    pub fn with_eps_rel(mut self, eps_rel: f64) -> Result<Self> {
        self.eps_rel = eps_rel;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_rel > 0.0 && self.gap_min > 0.0 && self.path_samples_default > 0) {
            return Err(Error::InvalidParameter(
                "tolerances must be strictly positive".into(),
            ));
        }
        if self.eps_rel >= self.gap_min {
            return Err(Error::InvalidParameter(format!(
                "eps_rel ({:e}) must be smaller than gap_min ({:e})",
                self.eps_rel, self.gap_min
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let tol = TolerancePolicy::default();
        assert!(tol.validate().is_ok());
        assert_eq!(tol.path_samples_default, 64);
        assert!(TolerancePolicy::machine().validate().is_ok());
    }

    #[test]
    fn rejects_inverted_thresholds() {
        assert!(TolerancePolicy::new(1e-3, 1e-6, 64).is_err());
        assert!(TolerancePolicy::new(0.0, 1e-6, 64).is_err());
        assert!(TolerancePolicy::new(1e-10, 1e-6, 0).is_err());
    }
}
