use serde::{Deserialize, Serialize};

use super::ClaimDistribution;
use crate::error::{Result, RuinError};

/// Smallest perturbation volatility accepted; the Brownian-bridge ruin
/// correction degenerates as β → 0.
pub const MIN_BETA: f64 = 1e-6;

/// Insurer and market parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Claim arrival intensity λ.
    pub lambda: f64,
    /// Gross premium rate.
    pub c: f64,
    /// Expected-value loading θ of the reinsurance premium.
    pub theta: f64,
    /// Variance loading η of the reinsurance premium.
    pub eta: f64,
    /// Volatility β of the Brownian perturbation.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, c: f64, theta: f64, eta: f64, beta: f64) -> Result<Self> {
        let p = Self {
            lambda,
            c,
            theta,
            eta,
            beta,
        };
        p.check_ranges()?;
        Ok(p)
    }

    /// Checks that do not involve the claim law.
    pub fn check_ranges(&self) -> Result<()> {
        let fail = |m: String| Err(RuinError::ParamsInvariantViolated(m));
        let all = [self.lambda, self.c, self.theta, self.eta, self.beta];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite".into());
        }
        if self.lambda <= 0.0 {
            return fail(format!(
                "claim intensity lambda = {} must be positive",
                self.lambda
            ));
        }
        if self.beta < MIN_BETA {
            return fail(format!(
                "volatility beta = {} must be at least {MIN_BETA}",
                self.beta
            ));
        }
        if self.theta < 0.0 || self.eta < 0.0 {
            return fail("loadings theta and eta must be non-negative".into());
        }
        if self.theta + self.eta <= 0.0 {
            return fail("at least one of theta, eta must be positive".into());
        }
        Ok(())
    }

    /// Full admissibility: λμ < c < (1+θ)λμ + (η/2)λσ².
    pub fn validate(&self, dist: &ClaimDistribution) -> Result<()> {
        self.check_ranges()?;
        dist.validate()?;
        let lm = self.lambda * dist.mean();
        if self.c <= lm {
            return Err(RuinError::ParamsInvariantViolated(format!(
                "premium rate c = {} must exceed the expected claim rate lambda*mu = {lm} (c > lambda*mu)",
                self.c
            )));
        }
        let full = self.full_reinsurance_premium(dist);
        if self.c >= full {
            return Err(RuinError::ParamsInvariantViolated(format!(
                "premium rate c = {} must be below the full-reinsurance premium {full} \
                 (c < (1+theta)*lambda*mu + (eta/2)*lambda*sigma^2)",
                self.c
            )));
        }
        Ok(())
    }

    /// (1+θ)λμ + (η/2)λσ², the price of ceding every claim.
    pub fn full_reinsurance_premium(&self, dist: &ClaimDistribution) -> f64 {
        (1.0 + self.theta) * self.lambda * dist.mean()
            + 0.5 * self.eta * self.lambda * dist.second_moment()
    }

    /// κ without the positivity check.
    pub fn kappa_unchecked(&self, dist: &ClaimDistribution) -> f64 {
        self.full_reinsurance_premium(dist) - self.c
    }

    /// Net drift c − λμ of the uncontrolled surplus.
    pub fn safety_margin(&self, dist: &ClaimDistribution) -> f64 {
        self.c - self.lambda * dist.mean()
    }
}
