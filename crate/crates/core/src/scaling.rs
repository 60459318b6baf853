//! Scaled jump model and its convergence to the diffusion approximation.
//!
//! The scaled system multiplies the claim intensity by n, divides claims and
//! the expected-value loading by √n, and raises the premium so that the net
//! drift c − λμ and κ do not depend on n. Its maximal adjustment coefficient
//! ρ_J^(n) satisfies ρ_D − C/√n < ρ_J^(n) < ρ_D for large n, and its minimal
//! ruin probability is sandwiched between (1 − δ/√n)e^{−ρ_D x} and
//! e^{−ρ_J^(n) x}.

use rayon::prelude::*;
use serde::Serialize;

use crate::classical::{retention_hrj, solve_rho_j_with, AdjustmentSolution};
use crate::diffusion::DiffusionSolution;
use crate::error::{Result, RuinError};
use crate::model::{retention_moments, ClaimDistribution, ModelParams};
use crate::numerics::{exp_m1_m_x, QuadratureSpec};

/// Safety factor applied to the lower limit for C.
pub const C_SAFETY: f64 = 1.01;
/// Default ε in the definition of δ.
pub const DEFAULT_EPS: f64 = 1e-3;
const D_GRID_POINTS: usize = 512;
const D_GRID_TAIL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledModel {
    pub n: f64,
    pub params: ModelParams,
    pub dist: ClaimDistribution,
}

/// λ_n = nλ, Y_n = Y/√n, θ_n = θ/√n, c_n = c + (√n − 1)λμ; η and β unchanged.
pub fn scale_params(p: &ModelParams, dist: &ClaimDistribution, n: f64) -> Result<ScaledModel> {
    if !(n.is_finite() && n > 0.0) {
        return Err(RuinError::ParamsInvariantViolated(format!(
            "scale factor must be positive, got {n}"
        )));
    }
    let k = n.sqrt();
    let params = ModelParams {
        lambda: n * p.lambda,
        c: p.c + (k - 1.0) * p.lambda * dist.mean(),
        theta: p.theta / k,
        eta: p.eta,
        beta: p.beta,
    };
    Ok(ScaledModel {
        n,
        params,
        dist: dist.scaled(n)?,
    })
}

/// C = 1.01 · (1/3)·λE(R_D³)/(β² + λE(R_D²))·ρ_D².
pub fn constant_c(
    sol: &DiffusionSolution,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let m = retention_moments(dist, &sol.retention, None, spec)?;
    Ok(
        C_SAFETY * p.lambda * m.e_r3 / (3.0 * (p.beta * p.beta + p.lambda * m.e_r2))
            * sol.rho_d
            * sol.rho_d,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBoundConstants {
    pub eps: f64,
    pub delta: f64,
    /// Threshold N: the lower bound holds for every n > N.
    pub n_min: u64,
    /// Smallest m with ρ_D/√m < r_∞/2.
    pub m: u64,
}

/// Thresholds d at which suprema over the excess laws Z_d are taken.
pub fn d_grid(dist: &ClaimDistribution) -> Vec<f64> {
    if let ClaimDistribution::Exponential { .. } = dist {
        // every Z_d has the law of Y
        return vec![0.0];
    }
    let top = dist.survival_point(D_GRID_TAIL);
    let lo = top * 1e-6;
    let mut grid = vec![0.0];
    let ratio = (top / lo).powf(1.0 / (D_GRID_POINTS as f64 - 2.0));
    let mut d = lo;
    for _ in 1..D_GRID_POINTS {
        grid.push(d);
        d *= ratio;
    }
    if let ClaimDistribution::Empirical { atoms, .. } = dist {
        grid.extend(atoms.iter().copied());
    }
    grid.retain(|d| dist.survival(*d) > 0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// sup_d √N·E[e^{sZ_d} − 1 − sZ_d] with s = ρ_D/√N, which equals
/// sup_d (ρ_D²/√N)∫₀¹(1 − ω)E(Z_d² e^{ωsZ_d})dω.
pub fn lower_bound_remainder(
    rho_d: f64,
    big_n: f64,
    dist: &ClaimDistribution,
    grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let k = big_n.sqrt();
    let s = rho_d / k;
    if let ClaimDistribution::Exponential { rate } = dist {
        if s >= *rate {
            return Err(RuinError::MgfDomainExceeded {
                r: s,
                radius: *rate,
            });
        }
        return Ok(rho_d * rho_d / (k * rate * (rate - s)));
    }
    let vals: Result<Vec<f64>> = grid
        .iter()
        .map(|&d| {
            dist.integrate_excess(
                d,
                |z, lq| {
                    let a = s * z;
                    if a > 30.0 {
                        (a + lq).exp() - (1.0 + a) * lq.exp()
                    } else {
                        exp_m1_m_x(a) * lq.exp()
                    }
                },
                spec,
            )
        })
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max) * k)
}

pub fn delta_and_n(
    sol: &DiffusionSolution,
    dist: &ClaimDistribution,
    eps: f64,
    spec: &QuadratureSpec,
) -> Result<LowerBoundConstants> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(RuinError::ConfigError(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let rho = sol.rho_d;
    let r_inf = dist.mgf_radius();
    let m = if r_inf.is_finite() {
        let mut m = ((2.0 * rho / r_inf).powi(2)).floor().max(1.0) as u64;
        while rho / (m as f64).sqrt() >= 0.5 * r_inf {
            m += 1;
        }
        m
    } else {
        1
    };
    let grid = d_grid(dist);
    let s_m = rho / (m as f64).sqrt();
    let mut sup_excess_mean = 0.0f64;
    for &d in &grid {
        let v = dist.excess_second_exp_moment(d, s_m, spec).map_err(|e| {
            RuinError::ConditionViolated(format!("E(Z_d^2 e^(s Z_d)) at d = {d}: {e}"))
        })?;
        if !v.is_finite() {
            return Err(RuinError::ConditionViolated(format!(
                "E(Z_d^2 e^(s Z_d)) is not finite at d = {d}"
            )));
        }
        sup_excess_mean = sup_excess_mean.max(dist.excess_mean(d, spec)?);
    }
    let delta = rho * sup_excess_mean + eps;
    let floor = (delta * delta).max(m as f64).floor() as u64 + 1;
    let ok = |big_n: u64| -> Result<bool> {
        Ok(lower_bound_remainder(rho, big_n as f64, dist, &grid, spec)? <= eps)
    };
    let mut lo = floor;
    if ok(lo)? {
        return Ok(LowerBoundConstants {
            eps,
            delta,
            n_min: lo,
            m,
        });
    }
    let mut hi = lo.saturating_mul(2);
    while !ok(hi)? {
        if hi > 1 << 62 {
            return Err(RuinError::NumericalFailure(
                "no admissible N below 2^62".into(),
            ));
        }
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(LowerBoundConstants {
        eps,
        delta,
        n_min: hi,
        m,
    })
}

/// ρ_J^(n) from the scaled model; `diffusion` is the unscaled solution,
/// whose ρ_D is also the scaled one.
pub fn rho_j_scaled(
    p: &ModelParams,
    dist: &ClaimDistribution,
    diffusion: &DiffusionSolution,
    n: f64,
    spec: &QuadratureSpec,
) -> Result<AdjustmentSolution> {
    let s = scale_params(p, dist, n)?;
    solve_rho_j_with(&s.params, &s.dist, diffusion, spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiBounds {
    /// (1 − δ/√n)e^{−ρ_D x}.
    pub lower: f64,
    /// e^{−(ρ_D − C/√n)x}.
    pub upper: f64,
    /// e^{−ρ_J^(n) x}.
    pub lundberg_upper: f64,
    /// n ≤ N: the bounds are not guaranteed.
    pub pre_asymptotic: bool,
}

pub fn psi_bounds(
    rho_d: f64,
    rho_j_n: f64,
    c: f64,
    lower: &LowerBoundConstants,
    n: f64,
    x: f64,
) -> PsiBounds {
    let k = n.sqrt();
    PsiBounds {
        lower: (1.0 - lower.delta / k) * (-rho_d * x).exp(),
        upper: (-(rho_d - c / k) * x).exp(),
        lundberg_upper: (-rho_j_n * x).exp(),
        pre_asymptotic: n <= lower.n_min as f64,
    }
}

/// sup over the grid of |√n·ĤR_J^(n)(y/√n) − R_D(y)|.
pub fn retention_deviation(
    sol_n: &AdjustmentSolution,
    scaled: &ScaledModel,
    diffusion: &DiffusionSolution,
    y_grid: &[f64],
) -> f64 {
    let k = scaled.n.sqrt();
    y_grid
        .iter()
        .map(|&y| {
            let hr = retention_hrj(sol_n.rho_j, scaled.params.theta, scaled.params.eta, y / k);
            (k * hr - diffusion.retention.eval(y)).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledRecord {
    pub n: f64,
    pub rho_j_n: f64,
    /// ρ_D − C/√n.
    pub lower: f64,
    /// ρ_D.
    pub upper: f64,
    pub retention_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rho_d: f64,
    pub c: f64,
    pub constants: LowerBoundConstants,
    pub records: Vec<ScaledRecord>,
}

/// Solves the scaled problem for each n (in parallel) and collects the
/// adjustment-coefficient sandwich and retention deviations.
pub fn retention_convergence(
    p: &ModelParams,
    dist: &ClaimDistribution,
    diffusion: &DiffusionSolution,
    n_list: &[f64],
    y_grid: &[f64],
    spec: &QuadratureSpec,
) -> Result<Vec<ScaledRecord>> {
    let c = constant_c(diffusion, p, dist, spec)?;
    n_list
        .par_iter()
        .map(|&n| {
            let scaled = scale_params(p, dist, n)?;
            let sol = solve_rho_j_with(&scaled.params, &scaled.dist, diffusion, spec)?;
            Ok(ScaledRecord {
                n,
                rho_j_n: sol.rho_j,
                lower: diffusion.rho_d - c / n.sqrt(),
                upper: diffusion.rho_d,
                retention_dev: retention_deviation(&sol, &scaled, diffusion, y_grid),
            })
        })
        .collect()
}

pub fn convergence_report(
    p: &ModelParams,
    dist: &ClaimDistribution,
    diffusion: &DiffusionSolution,
    n_list: &[f64],
    y_grid: &[f64],
    eps: f64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    Ok(ConvergenceReport {
        rho_d: diffusion.rho_d,
        c: constant_c(diffusion, p, dist, spec)?,
        constants: delta_and_n(diffusion, dist, eps, spec)?,
        records: retention_convergence(p, dist, diffusion, n_list, y_grid, spec)?,
    })
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixBounds {
    /// e^{−ρ_J x} ∧ 1.
    pub supersolution: f64,
    /// e^{−γx} ∧ 1 with γ = 2c/β².
    pub subsolution: f64,
    pub gamma: f64,
}

pub fn appendix_bounds(p: &ModelParams, rho_j: f64, x: f64) -> AppendixBounds {
    let gamma = 2.0 * p.c / (p.beta * p.beta);
    let b = |rate: f64| {
        if x <= 0.0 {
            1.0
        } else {
            (-rate * x).exp().min(1.0)
        }
    };
    AppendixBounds {
        supersolution: b(rho_j),
        subsolution: b(gamma),
        gamma,
    }
}

/// sup_x √n·|ψ̂^(n)(x) − e^{−ρ_D x}| over estimated ruin probabilities.
pub fn empirical_c_prime(n: f64, rho_d: f64, xs: &[f64], psi_hat: &[f64]) -> f64 {
    xs.iter()
        .zip(psi_hat)
        .map(|(x, p)| n.sqrt() * (p - (-rho_d * x).exp()).abs())
        .fold(0.0, f64::max)
}

/// Smallest J ≥ 0 with ψ̂⁰ − ψ̂ ≤ J/√n + e^{−ρ_D(Y)x} − e^{−ρ_D x} at every
/// sample, comparing uncontrolled and optimally controlled ruin estimates.
pub fn empirical_j(
    n: f64,
    rho_d_uncontrolled: f64,
    rho_d: f64,
    xs: &[f64],
    psi_uncontrolled: &[f64],
    psi_controlled: &[f64],
) -> f64 {
    xs.iter()
        .zip(psi_uncontrolled.iter().zip(psi_controlled))
        .map(|(x, (u, c))| {
            let gap = (-rho_d_uncontrolled * x).exp() - (-rho_d * x).exp();
            n.sqrt() * (u - c - gap)
        })
        .fold(0.0, f64::max)
}
