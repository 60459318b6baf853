//! Maximal adjustment coefficient of the jump model and its optimal retention.
//!
//! For an exponent r the pointwise optimal retention keeps small claims whole
//! and, above y* = ln(1+θ)/r, retains the root R_c(r, y) of
//! (1+θ) + ηy − ηR = e^{rR}. The maximal adjustment coefficient ρ_J is the
//! zero of
//!
//! G(r) = −κ − ½β²r + λE[θR + ηYR − (η/2)R² − (e^{rR} − 1 − rR)/r],
//!
//! with R = ĤR_r(Y). G(0) = c − λμ > 0 and G(ρ_D) < 0.

use serde::Serialize;

use crate::diffusion::{solve_alpha_star, DiffusionSolution};
use crate::error::{Result, RuinError};
use crate::model::{
    drift_from_moments, kappa, retention_moments, ClaimDistribution, ModelParams, RetentionFunction,
};
use crate::numerics::{exp_m1_m_x, find_root_monotone, QuadratureSpec, RootSpec, SolveReport};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjustmentSolution {
    pub rho_j: f64,
    pub retention: RetentionFunction,
    /// ln(1+θ)/ρ_J; claims below it are kept whole.
    pub threshold: f64,
    pub report: SolveReport,
    /// Residual of the survival-function form of the defining equation.
    pub equation_residual: f64,
    /// Diffusion coefficient ρ_D used as the upper bracket.
    pub rho_d: f64,
}

impl AdjustmentSolution {
    pub fn retention_at(&self, y: f64) -> f64 {
        self.retention.eval(y)
    }
}

/// R_c(r, y) for y ≥ ln(1+θ)/r.
pub fn solve_rc(r: f64, theta: f64, eta: f64, y: f64) -> Result<f64> {
    if !(r > 0.0 && theta >= 0.0 && eta >= 0.0 && y.is_finite()) {
        return Err(RuinError::NumericalFailure(format!(
            "invalid inner-solve arguments r = {r}, theta = {theta}, eta = {eta}, y = {y}"
        )));
    }
    let threshold = theta.ln_1p() / r;
    if y < threshold {
        return Err(RuinError::ThresholdViolation { y, threshold });
    }
    Ok(rc_newton(r, theta, eta, y))
}

/// (1+θ) + ηy − ηR − e^{rR}, written to avoid cancellation near zero.
pub fn rc_equation(r: f64, theta: f64, eta: f64, y: f64, rc: f64) -> f64 {
    theta + eta * (y - rc) - (r * rc).exp_m1()
}

fn rc_newton(r: f64, theta: f64, eta: f64, y: f64) -> f64 {
    rc_newton_from(r, theta, eta, y, theta.ln_1p() / r)
}

fn rc_newton_from(r: f64, theta: f64, eta: f64, y: f64, threshold: f64) -> f64 {
    if eta == 0.0 {
        return threshold.min(y);
    }
    // The equation is concave and decreasing in R and non-positive at
    // min(ln(1+θ+ηy)/r, y), so Newton descends monotonically onto the root.
    let mut x = ((theta + eta * y).ln_1p() / r).min(y);
    for _ in 0..200 {
        let em1 = (r * x).exp_m1();
        let f = theta + eta * (y - x) - em1;
        let step = f / (eta + r * (1.0 + em1));
        let next = x + step;
        if !(next < x) {
            break;
        }
        x = next;
        // the next correction would be O(r·step²)
        if -step <= 1e-9 * x {
            break;
        }
    }
    x.clamp(threshold.min(y), y)
}

/// ĤR(y): y below ln(1+θ)/r, R_c(r, y) above.
pub fn retention_hrj(r: f64, theta: f64, eta: f64, y: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let threshold = theta.ln_1p() / r;
    if y < threshold {
        y
    } else {
        rc_newton_from(r, theta, eta, y, threshold)
    }
}

/// ∂R_c/∂y = η/(η + r e^{rR_c}).
pub fn rc_slope(r: f64, theta: f64, eta: f64, y: f64) -> f64 {
    let rc = rc_newton(r, theta, eta, y);
    eta / (eta + r * (r * rc).exp())
}

/// Curvilinear asymptote ln(1+θ+ηy)/ρ of the optimal retention.
pub fn asymptote_g(rho: f64, theta: f64, eta: f64, y: f64) -> f64 {
    (theta + eta * y).ln_1p() / rho
}

/// G(r) in the form used by the solver; G(0) is the limit c − λμ.
pub fn g_function(
    r: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if r <= 0.0 {
        return Ok(p.safety_margin(dist));
    }
    let (theta, eta, lambda) = (p.theta, p.eta, p.lambda);
    let threshold = theta.ln_1p() / r;
    let e_phi = dist.integrate_density(
        |y, lp| {
            let rr = retention_hrj(r, theta, eta, y);
            let phi = theta * rr + eta * y * rr - 0.5 * eta * rr * rr - exp_m1_m_x(r * rr) / r;
            lambda * phi * lp.exp()
        },
        &[threshold],
        spec,
    )?;
    Ok(e_phi - p.kappa_unchecked(dist) - 0.5 * p.beta * p.beta * r)
}

/// The same G written against the survival function:
/// λ∫₀^{y*}(1+θ+ηy−e^{ry})S_Y dy + λη∫_{y*}^∞ R_c S_Y dy − κ − ½β²r.
pub fn g_survival_form(
    r: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if r <= 0.0 {
        return Ok(p.safety_margin(dist));
    }
    let (theta, eta) = (p.theta, p.eta);
    let threshold = theta.ln_1p() / r;
    let below = dist.integrate_survival_over(
        |y| theta + eta * y - (r * y).exp_m1(),
        0.0,
        threshold,
        &[],
        spec,
    )?;
    let above = if eta > 0.0 {
        dist.integrate_survival_over(
            |y| eta * rc_newton(r, theta, eta, y),
            threshold,
            f64::INFINITY,
            &[],
            spec,
        )?
    } else {
        0.0
    };
    Ok(p.lambda * (below + above) - p.kappa_unchecked(dist) - 0.5 * p.beta * p.beta * r)
}

/// c − λμ − r(λ∫(e^{rĤR}−1)/r S_Y dy + β²/2).
pub fn equation_residual(
    r: f64,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (theta, eta) = (p.theta, p.eta);
    let threshold = theta.ln_1p() / r;
    let int = dist.integrate_survival(
        |y| (r * retention_hrj(r, theta, eta, y)).exp_m1(),
        &[threshold],
        spec,
    )?;
    Ok(p.safety_margin(dist) - p.lambda * int - 0.5 * p.beta * p.beta * r)
}

pub fn solve_rho_j(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<AdjustmentSolution> {
    let diffusion = solve_alpha_star(p, dist, spec)?;
    solve_rho_j_with(p, dist, &diffusion, spec)
}

/// As [`solve_rho_j`], reusing an already solved diffusion problem.
pub fn solve_rho_j_with(
    p: &ModelParams,
    dist: &ClaimDistribution,
    diffusion: &DiffusionSolution,
    spec: &QuadratureSpec,
) -> Result<AdjustmentSolution> {
    p.validate(dist)?;
    kappa(p, dist)?;
    let report = find_root_monotone(
        |r| g_function(r, p, dist, spec),
        &RootSpec::new(0.0, diffusion.rho_d),
    )?;
    let rho_j = report.root;
    if !(rho_j > 0.0) {
        return Err(RuinError::NumericalFailure(format!(
            "adjustment coefficient {rho_j} is not positive"
        )));
    }
    Ok(AdjustmentSolution {
        rho_j,
        retention: RetentionFunction::ClassicalOptimal {
            rho: rho_j,
            theta: p.theta,
            eta: p.eta,
        },
        threshold: p.theta.ln_1p() / rho_j,
        report,
        equation_residual: equation_residual(rho_j, p, dist, spec)?,
        rho_d: diffusion.rho_d,
    })
}

/// Adjustment coefficient of the jump model under a fixed retention: the
/// positive zero of j(r)/r = drift − ½β²r − λE[e^{rR} − 1 − rR]/r.
pub fn adjustment_for_retention(
    p: &ModelParams,
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    spec: &QuadratureSpec,
) -> Result<SolveReport> {
    p.check_ranges()?;
    let m = retention_moments(dist, retention, None, spec)?;
    let drift = drift_from_moments(p, dist, &m);
    if !(drift > 0.0) {
        return Err(RuinError::NetProfitViolated { drift });
    }
    let radius = retention.mgf_radius(dist);
    let h = |r: f64| -> Result<f64> {
        if r <= 0.0 {
            return Ok(drift);
        }
        let rem = exp_remainder(dist, retention, r, spec)?;
        Ok(drift - 0.5 * p.beta * p.beta * r - p.lambda * rem / r)
    };
    // e^x − 1 − x ≥ x²/2 puts the root at or below the diffusion coefficient
    let rho_d = 2.0 * drift / (p.lambda * m.e_r2 + p.beta * p.beta);
    let hi = if rho_d < radius {
        rho_d
    } else {
        let mut found = None;
        for k in 1..=52 {
            let r = radius * (1.0 - 0.5f64.powi(k));
            match h(r) {
                Ok(v) if v < 0.0 => {
                    found = Some(r);
                    break;
                }
                Ok(_) => {}
                Err(RuinError::DistributionUnsupported(_))
                | Err(RuinError::QuadratureNoConvergence { .. }) => break,
                Err(e) => return Err(e),
            }
        }
        found.ok_or(RuinError::AdjustmentNotFound { radius })?
    };
    let report = find_root_monotone(h, &RootSpec::new(0.0, hi))?;
    // residual reported for j(r) = r·h(r)
    Ok(SolveReport {
        residual: report.residual * report.root,
        ..report
    })
}

/// E[e^{rR} − 1 − rR].
fn exp_remainder(
    dist: &ClaimDistribution,
    retention: &RetentionFunction,
    r: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let q = match retention {
        RetentionFunction::Full => Some(1.0),
        RetentionFunction::Zero => Some(0.0),
        RetentionFunction::QuotaShare { q } => Some(*q),
        _ => None,
    };
    if let Some(q) = q {
        return Ok(dist.mgf(q * r)? - 1.0 - q * r * dist.mean());
    }
    dist.integrate_density(
        |y, lp| {
            let a = r * retention.eval(y);
            if a > 30.0 {
                (a + lp).exp() - (1.0 + a) * lp.exp()
            } else {
                exp_m1_m_x(a) * lp.exp()
            }
        },
        &retention.breakpoints(),
        spec,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassicalStopLoss {
    pub rho_j: f64,
    pub deductible: f64,
    pub report: SolveReport,
}

/// Pure expected-value loading: the optimal retention is a stop loss at
/// ln(1+θ)/ρ_J, where
/// (1+θ)λμ − c + ½β²r = λ∫₀^{ln(1+θ)/r}(1+θ − e^{ry})S_Y(y)dy.
pub fn eta0_classical(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<ClassicalStopLoss> {
    if p.eta != 0.0 {
        return Err(RuinError::ParamsInvariantViolated(
            "stop-loss specialisation requires eta = 0".into(),
        ));
    }
    p.validate(dist)?;
    let diffusion = solve_alpha_star(p, dist, spec)?;
    let margin = p.safety_margin(dist);
    let lhs0 = (1.0 + p.theta) * p.lambda * dist.mean() - p.c;
    let f = |r: f64| -> Result<f64> {
        if r <= 0.0 {
            return Ok(margin);
        }
        let d = p.theta.ln_1p() / r;
        let int =
            dist.integrate_survival_over(|y| p.theta - (r * y).exp_m1(), 0.0, d, &[], spec)?;
        Ok(p.lambda * int - lhs0 - 0.5 * p.beta * p.beta * r)
    };
    let report = find_root_monotone(f, &RootSpec::new(0.0, diffusion.rho_d))?;
    let deductible = p.theta.ln_1p() / report.root;
    if deductible > diffusion.kink {
        return Err(RuinError::NumericalFailure(format!(
            "jump-model deductible {deductible} exceeds the diffusion deductible {}",
            diffusion.kink
        )));
    }
    Ok(ClassicalStopLoss {
        rho_j: report.root,
        deductible,
        report,
    })
}

/// Pure variance loading: the claim size y₀ where the jump-model retention
/// drops below the proportional diffusion retention.
pub fn tet0_crossing(
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if p.theta != 0.0 {
        return Err(RuinError::ParamsInvariantViolated(
            "crossing point is defined for theta = 0".into(),
        ));
    }
    let diffusion = solve_alpha_star(p, dist, spec)?;
    let sol = solve_rho_j_with(p, dist, &diffusion, spec)?;
    crossing_point(&sol, &diffusion, dist)
}

/// Sign change of R_c(ρ_J, y) − R_D(y) on (0, ∞).
pub fn crossing_point(
    sol: &AdjustmentSolution,
    diffusion: &DiffusionSolution,
    dist: &ClaimDistribution,
) -> Result<f64> {
    let diff = |y: f64| Ok(sol.retention.eval(y) - diffusion.retention.eval(y));
    let cap = dist.survival_point(1e-12);
    let mut lo = 1e-6 * dist.mean().min(cap);
    while diff(lo)? <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(RuinError::NumericalFailure(
                "jump-model retention is not above the diffusion retention near zero".into(),
            ));
        }
    }
    let mut hi = dist.mean().min(cap);
    while diff(hi)? >= 0.0 {
        if hi >= cap {
            return Err(RuinError::NumericalFailure(format!(
                "no crossing below the 1 - 1e-12 quantile {cap}"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    Ok(find_root_monotone(diff, &RootSpec::new(lo, hi).f_tol(1e-12))?.root)
}
