//! Optimal retention and minimal ruin probability for the diffusion
//! approximation of the controlled surplus.
//!
//! The optimal retention is R_D(y) = min((θ + ηy)/α*, y), where α* > η is the
//! unique zero of the strictly decreasing function
//!
//! G(α) = θ E R_D + η E(Y R_D) − (α/2) E R_D² − [β²(α − η) + 2κ]/(2λ),
//!
//! and the minimal ruin probability is e^{−(α* − η)x}.

use serde::Serialize;

use crate::error::{Result, RuinError};
use crate::model::{
    drift_from_moments, kappa, retention_moments, ClaimDistribution, ModelParams, RetentionFunction,
};
use crate::numerics::{find_root_monotone, QuadratureSpec, RootSpec, SolveReport};

/// Retained-claim moments E R_D, E(Y R_D), E R_D² at a trial α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GMoments {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionSolution {
    pub alpha_star: f64,
    pub rho_d: f64,
    /// Claim size θ/(α* − η) above which reinsurance starts.
    pub kink: f64,
    pub retention: RetentionFunction,
    pub report: SolveReport,
    /// c − λμ − (α* − η)(λ∫R_D S_Y + β²/2), an independent check of the root.
    pub equation_residual: f64,
}

impl DiffusionSolution {
    pub fn retention_at(&self, y: f64) -> f64 {
        self.retention.eval(y)
    }

    pub fn psi(&self, x: f64) -> f64 {
        psi_d(self.rho_d, x)
    }
}

pub fn g_moments(
    alpha: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<GMoments> {
    let r = RetentionFunction::DiffusionOptimal {
        alpha,
        theta: p.theta,
        eta: p.eta,
    };
    let m = retention_moments(dist, &r, None, spec)?;
    Ok(GMoments {
        g1: m.e_r,
        g2: m.e_yr,
        g3: m.e_r2,
    })
}

/// λG(α); at α ≤ η it returns the limit value c − λμ.
pub fn g_function(
    alpha: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if alpha <= p.eta {
        return Ok(p.safety_margin(dist));
    }
    let g = g_moments(alpha, p, dist, spec)?;
    let k = p.kappa_unchecked(dist);
    Ok(
        p.lambda * (p.theta * g.g1 + p.eta * g.g2 - 0.5 * alpha * g.g3)
            - 0.5 * (p.beta * p.beta * (alpha - p.eta) + 2.0 * k),
    )
}

/// c − λμ − (α − η)(λ∫R_D S_Y dy + β²/2).
pub fn equation_residual(
    alpha: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let r = RetentionFunction::DiffusionOptimal {
        alpha,
        theta: p.theta,
        eta: p.eta,
    };
    let int = dist.integrate_survival(|y| r.eval(y), &r.breakpoints(), spec)?;
    Ok(p.safety_margin(dist) - (alpha - p.eta) * (p.lambda * int + 0.5 * p.beta * p.beta))
}

pub fn solve_alpha_star(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<DiffusionSolution> {
    p.validate(dist)?;
    kappa(p, dist)?;
    let entry = g_function(p.eta, p, dist, spec)?;
    if !(entry > 0.0) {
        return Err(RuinError::ParamsInvariantViolated(format!(
            "G at eta must be positive, found {entry}"
        )));
    }
    let root_spec = RootSpec::new(p.eta, p.eta + 1.0).expand(1000, None);
    let report = find_root_monotone(|a| g_function(a, p, dist, spec), &root_spec)?;
    let alpha_star = report.root;
    if !(alpha_star > p.eta) {
        return Err(RuinError::NumericalFailure(format!(
            "alpha* = {alpha_star} does not exceed eta = {}",
            p.eta
        )));
    }
    let retention = RetentionFunction::DiffusionOptimal {
        alpha: alpha_star,
        theta: p.theta,
        eta: p.eta,
    };
    Ok(DiffusionSolution {
        alpha_star,
        rho_d: alpha_star - p.eta,
        kink: p.theta / (alpha_star - p.eta),
        retention,
        report,
        equation_residual: equation_residual(alpha_star, p, dist, spec)?,
    })
}

/// min((θ + ηy)/α*, y).
pub fn retention_rd(sol: &DiffusionSolution, y: f64) -> f64 {
    sol.retention.eval(y)
}

/// e^{−ρx} for x ≥ 0, and 1 below zero.
pub fn psi_d(rho: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        (-rho * x).exp()
    }
}

/// Adjustment coefficient 2·drift/(λE R² + β²) of the diffusion approximation
/// under a fixed retention.
pub fn rho_d_of_r(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    spec: &QuadratureSpec,
) -> Result<f64> {
    p.check_ranges()?;
    let m = retention_moments(dist, retention, None, spec)?;
    let drift = drift_from_moments(p, dist, &m);
    if !(drift > 0.0) {
        return Err(RuinError::NetProfitViolated { drift });
    }
    Ok(2.0 * drift / (p.lambda * m.e_r2 + p.beta * p.beta))
}

/// Generator of the diffusion approximation applied to e^{−ρx} under the
/// given retention; vanishes identically for the optimal pair.
pub fn hjb_residual(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    rho: f64,
    x: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = retention_moments(dist, retention, None, spec)?;
    let drift = drift_from_moments(p, dist, &m);
    let v = (-rho * x).exp();
    let vol2 = p.beta * p.beta + p.lambda * m.e_r2;
    Ok(0.5 * vol2 * rho * rho * v - drift * rho * v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StopLossSolution {
    pub alpha_star: f64,
    pub deductible: f64,
    pub report: SolveReport,
}

/// Pure expected-value loading: R_D is a stop loss with deductible θ/α*, where
/// (1+θ)λμ − c + ½β²α = λ∫₀^{θ/α}(θ − αy)S_Y(y)dy.
pub fn eta0_deductible(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<StopLossSolution> {
    if p.eta != 0.0 {
        return Err(RuinError::ParamsInvariantViolated(
            "stop-loss specialisation requires eta = 0".into(),
        ));
    }
    p.validate(dist)?;
    let margin = p.safety_margin(dist);
    let lhs0 = (1.0 + p.theta) * p.lambda * dist.mean() - p.c;
    let f = |alpha: f64| -> Result<f64> {
        if alpha <= 0.0 {
            return Ok(margin);
        }
        let d = p.theta / alpha;
        let int = dist.integrate_survival_over(|y| p.theta - alpha * y, 0.0, d, &[], spec)?;
        Ok(p.lambda * int - lhs0 - 0.5 * p.beta * p.beta * alpha)
    };
    let report = find_root_monotone(f, &RootSpec::new(0.0, 1.0).expand(1000, None))?;
    Ok(StopLossSolution {
        alpha_star: report.root,
        deductible: p.theta / report.root,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProportionalSolution {
    pub alpha_star: f64,
    /// 2(c − λμ)/(λσ²), the variance loading that would make c break even.
    pub eta0: f64,
    /// Retained proportion η/α*.
    pub quota: f64,
}

/// Pure variance loading: closed-form α*, with R_D the quota share η/α*.
pub fn tet0_alpha(p: &ModelParams, dist: &ClaimDistribution) -> Result<ProportionalSolution> {
    if p.theta != 0.0 {
        return Err(RuinError::ParamsInvariantViolated(
            "proportional specialisation requires theta = 0".into(),
        ));
    }
    p.check_ranges()?;
    let ls2 = p.lambda * dist.second_moment();
    let eta0 = 2.0 * p.safety_margin(dist) / ls2;
    if !(eta0 > 0.0 && eta0 < p.eta) {
        return Err(RuinError::ParamsInvariantViolated(format!(
            "eta0 = 2(c - lambda*mu)/(lambda*sigma^2) = {eta0} must lie in (0, eta = {})",
            p.eta
        )));
    }
    let b2 = p.beta * p.beta;
    let a = p.eta * b2 - (p.eta - eta0) * ls2;
    let alpha_star = (a + (a * a + 4.0 * p.eta * p.eta * b2 * ls2).sqrt()) / (2.0 * b2);
    Ok(ProportionalSolution {
        alpha_star,
        eta0,
        quota: p.eta / alpha_star,
    })
}
