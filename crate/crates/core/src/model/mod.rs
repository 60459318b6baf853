//! Parameters, claim laws, retention functions and premium arithmetic.

mod distribution;
mod params;
mod retention;

pub use distribution::{ClaimDistribution, ClaimSampler};
pub use params::{ModelParams, MIN_BETA};
pub use retention::{Interpolation, RetentionFunction};

use serde::Serialize;

use crate::error::{Result, RuinError};
use crate::numerics::{find_root_monotone, QuadratureSpec, RootSpec};

/// Moments of the retained claim R(Y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RetentionMoments {
    pub e_r: f64,
    pub e_yr: f64,
    pub e_r2: f64,
    pub e_r3: f64,
    /// E e^{rR}, present when an exponent was requested.
    pub e_exp: Option<f64>,
}

/// E R, E(YR), E R², E R³ and optionally E e^{rR}.
pub fn retention_moments(
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    r: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<RetentionMoments> {
    retention.validate()?;
    if let Some(r) = r {
        let radius = retention.mgf_radius(dist);
        if !(r >= 0.0) || r >= radius {
            return Err(RuinError::MgfDomainExceeded { r, radius });
        }
    }
    let (mu, s2, m3) = (dist.mean(), dist.second_moment(), dist.third_moment());
    let closed = match retention {
        RetentionFunction::Full => Some((1.0, r.map(|r| dist.mgf(r)).transpose()?)),
        RetentionFunction::Zero => Some((0.0, r.map(|_| 1.0))),
        RetentionFunction::QuotaShare { q } => Some((*q, r.map(|r| dist.mgf(q * r)).transpose()?)),
        _ => None,
    };
    if let Some((q, e_exp)) = closed {
        return Ok(RetentionMoments {
            e_r: q * mu,
            e_yr: q * s2,
            e_r2: q * q * s2,
            e_r3: q * q * q * m3,
            e_exp,
        });
    }
    let bps = retention.breakpoints();
    let ev = |phi: &dyn Fn(f64) -> f64| dist.expect(phi, &bps, spec);
    let e_r = ev(&|y| retention.eval(y))?;
    let e_yr = ev(&|y| y * retention.eval(y))?;
    let e_r2 = ev(&|y| retention.eval(y).powi(2))?;
    let e_r3 = ev(&|y| retention.eval(y).powi(3))?;
    let e_exp = match r {
        Some(r) => Some(1.0 + expect_exp_m1(dist, retention, r, &bps, spec)?),
        None => None,
    };
    Ok(RetentionMoments {
        e_r,
        e_yr,
        e_r2,
        e_r3,
        e_exp,
    })
}

/// E[e^{rR(Y)} − 1], evaluated in log space where the exponent is large.
fn expect_exp_m1(
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    r: f64,
    bps: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    dist.integrate_density(
        |y, lp| {
            let a = r * retention.eval(y);
            if a > 30.0 {
                (a + lp).exp() - lp.exp()
            } else {
                a.exp_m1() * lp.exp()
            }
        },
        bps,
        spec,
    )
}

/// Reinsurance premium rate (1+θ)λE(Y−R) + (η/2)λE((Y−R)²).
pub fn premium_rate(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = retention_moments(dist, retention, None, spec)?;
    let ceded_mean = dist.mean() - m.e_r;
    let ceded_square = dist.second_moment() - 2.0 * m.e_yr + m.e_r2;
    Ok((1.0 + p.theta) * p.lambda * ceded_mean + 0.5 * p.eta * p.lambda * ceded_square)
}

/// κ = (1+θ)λμ + (η/2)λσ² − c, which must be positive.
pub fn kappa(p: &ModelParams, dist: &ClaimDistribution) -> Result<f64> {
    p.check_ranges()?;
    let k = p.kappa_unchecked(dist);
    if k > 0.0 {
        Ok(k)
    } else {
        Err(RuinError::ParamsInvariantViolated(format!(
            "kappa = {k} must be positive: full reinsurance would be affordable \
             (c < (1+theta)*lambda*mu + (eta/2)*lambda*sigma^2)"
        )))
    }
}

/// Drift −κ + λ(θE R + ηE(YR) − (η/2)E R²) of the controlled surplus
/// (and of its diffusion approximation).
pub fn drift_from_moments(p: &ModelParams, dist: &ClaimDistribution, m: &RetentionMoments) -> f64 {
    -p.kappa_unchecked(dist) + p.lambda * (p.theta * m.e_r + p.eta * m.e_yr - 0.5 * p.eta * m.e_r2)
}

pub fn drift(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = retention_moments(dist, retention, None, spec)?;
    Ok(drift_from_moments(p, dist, &m))
}

/// Whether the retention leaves the surplus with positive drift.
pub fn net_profit_holds(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    spec: &QuadratureSpec,
) -> Result<bool> {
    Ok(drift(p, dist, retention, spec)? > 0.0)
}

/// Smallest quota q₁ such that every quota share above it has positive drift.
pub fn admissible_quota_bound(p: &ModelParams, dist: &ClaimDistribution) -> Result<f64> {
    p.check_ranges()?;
    let k = kappa(p, dist)?;
    let (mu, s2) = (dist.mean(), dist.second_moment());
    let b = p.eta * s2 + p.theta * mu;
    let disc = b * b - 2.0 * p.eta * s2 * k / p.lambda;
    if disc < 0.0 {
        return Err(RuinError::NoAdmissibleQuota(disc));
    }
    // smaller root of (η/2)σ²q² − bq + κ/λ, in the form free of cancellation
    // (reduces to κ/(λθμ) at η = 0)
    Ok(2.0 * (k / p.lambda) / (b + disc.sqrt()))
}

/// Deductible M₁ such that every stop loss above it has positive drift.
pub fn admissible_stoploss_bound(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    p.validate(dist)?;
    let margin = p.safety_margin(dist);
    let h = |m: f64| -> Result<f64> {
        let ceded = dist.integrate_survival_over(
            |y| p.theta + p.eta * (y - m),
            m,
            f64::INFINITY,
            &[],
            spec,
        )?;
        Ok(p.lambda * ceded - margin)
    };
    let cap = dist.survival_point(1e-12);
    let mut lo = 0.0;
    let mut hi = dist.mean().min(cap);
    while h(hi)? > 0.0 {
        if hi >= cap {
            return Err(RuinError::NoFiniteRoot(format!(
                "stop-loss bound lies beyond the 1 - 1e-12 quantile {cap}"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    Ok(find_root_monotone(h, &RootSpec::new(lo, hi))?.root)
}
