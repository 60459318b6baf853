use thiserror::Error;

pub type Result<T> = std::result::Result<T, RuinError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuinError {
    #[error("model parameters violate an admissibility constraint: {0}")]
    ParamsInvariantViolated(String),

    #[error("invalid claim distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid retention function: {0}")]
    InvalidRetention(String),

    #[error("moment integral is not finite for this distribution: {0}")]
    DistributionUnsupported(String),

    #[error("exponent {r} is outside the moment generating function domain (radius {radius})")]
    MgfDomainExceeded { r: f64, radius: f64 },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})"
    )]
    QuadratureNoConvergence { subdivisions: usize, error: f64 },

    #[error("no sign change found in [{lo}, {hi}] after bracket expansion")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("retention violates the net-profit condition (diffusion drift {drift:e} <= 0)")]
    NetProfitViolated { drift: f64 },

    #[error("adjustment coefficient does not exist below the MGF radius {radius}")]
    AdjustmentNotFound { radius: f64 },

    #[error("claim {y} lies below the retention threshold {threshold}")]
    ThresholdViolation { y: f64, threshold: f64 },

    #[error("no quota-share proportion restores the net-profit condition (discriminant {0:e})")]
    NoAdmissibleQuota(f64),

    #[error("defining equation has no finite root: {0}")]
    NoFiniteRoot(String),

    #[error("excess-claim moment condition fails: {0}")]
    ConditionViolated(String),

    #[error("invalid simulation configuration: {0}")]
    ConfigError(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

impl RuinError {
    /// True for errors caused by user-supplied inputs rather than by a solver.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            RuinError::ParamsInvariantViolated(_)
                | RuinError::InvalidDistribution(_)
                | RuinError::InvalidRetention(_)
                | RuinError::NetProfitViolated { .. }
                | RuinError::NoAdmissibleQuota(_)
                | RuinError::ConfigError(_)
                | RuinError::MgfDomainExceeded { .. }
                | RuinError::ThresholdViolation { .. }
        )
    }
}
