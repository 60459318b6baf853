//! Monte Carlo ruin probabilities for the controlled jump-diffusion and its
//! diffusion approximation.
//!
//! Between claims the surplus is a Brownian motion with drift, advanced
//! exactly; a dip below zero inside an advance whose endpoints are both
//! positive is detected with the Brownian-bridge crossing probability
//! exp(−2ab/(β²Δt)). Paths are absorbed as survivors at a high barrier and
//! censored (counted as survivors) at a finite horizon.
//!
//! Every path draws from its own ChaCha stream selected by the path index, and
//! outcomes are reduced as integer counts, so results do not depend on the
//! number of worker threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::adjustment_for_retention;
use crate::error::{Result, RuinError};
use crate::model::{
    drift_from_moments, retention_moments, ClaimDistribution, ModelParams, RetentionFunction,
};
use crate::numerics::QuadratureSpec;
use crate::scaling::scale_params;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "RUINOPT_THREADS";

/// Survival is declared once e^{−ρ̂B} falls below this fraction of e^{−ρ̂x₀}.
const BARRIER_LEVEL: f64 = 1e-4;
/// Standard deviations of headroom built into the default horizon.
const HORIZON_SDS: f64 = 8.0;
/// Default number of steps across the horizon in diffusion mode.
const DIFFUSION_STEPS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SimModel {
    #[default]
    Classical,
    Diffusion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: SimModel,
    pub retention: RetentionFunction,
    pub x0: f64,
    pub paths: u64,
    pub seed: u64,
    /// Finite horizon; derived from the drift when absent.
    pub horizon: Option<f64>,
    /// Safe barrier; derived from the adjustment coefficient when absent.
    pub barrier: Option<f64>,
    /// Longest Brownian advance. In diffusion mode this is the time step.
    pub max_step: Option<f64>,
    /// Worker threads; falls back to `RUINOPT_THREADS`, then all cores.
    pub threads: Option<usize>,
    /// Paths per batch in the running-estimate trace.
    pub batch_size: Option<u64>,
}

impl SimConfig {
    pub fn new(
        model: SimModel,
        retention: RetentionFunction,
        x0: f64,
        paths: u64,
        seed: u64,
    ) -> Self {
        Self {
            model,
            retention,
            x0,
            paths,
            seed,
            horizon: None,
            barrier: None,
            max_step: None,
            threads: None,
            batch_size: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(RuinError::ConfigError(m));
        if self.paths < 1 {
            return fail("at least one path is required".into());
        }
        if !(self.x0.is_finite() && self.x0 >= 0.0) {
            return fail(format!(
                "initial surplus must be non-negative, got {}",
                self.x0
            ));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0) {
                return fail(format!("horizon must be positive, got {t}"));
            }
        }
        if let Some(b) = self.barrier {
            if !(b > 0.0) {
                return fail(format!("barrier must be positive, got {b}"));
            }
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0) {
                return fail(format!("maximal step must be positive, got {h}"));
            }
        }
        if self.threads == Some(0) {
            return fail("thread count must be positive".into());
        }
        if self.batch_size == Some(0) {
            return fail("batch size must be positive".into());
        }
        self.retention.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BatchEstimate {
    pub paths: u64,
    pub ruined: u64,
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub estimate: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub paths: u64,
    pub ruined: u64,
    pub censored: u64,
    pub censored_fraction: f64,
    pub seed: u64,
    pub barrier: f64,
    pub horizon: f64,
    /// Adjustment coefficient used to place the default barrier.
    pub rho_hat: f64,
    /// Cumulative estimates after each batch.
    pub running: Vec<BatchEstimate>,
}

impl SimResult {
    /// Writes the running estimates as CSV.
    pub fn write_running_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "paths,ruined,estimate,std_error")?;
        for b in &self.running {
            writeln!(w, "{},{},{},{}", b.paths, b.ruined, b.estimate, b.std_error)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Ruined,
    Survived,
    Censored,
}

/// Seeded generator for one path: the seed picks the key, the path index the stream.
pub fn path_rng(seed: u64, path: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

fn thread_count(cfg: &SimConfig) -> Result<usize> {
    if let Some(t) = cfg.threads {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|t| *t > 0)
            .ok_or_else(|| {
                RuinError::ConfigError(format!(
                    "{THREADS_ENV} must be a positive integer, got {v:?}"
                ))
            }),
        Err(_) => Ok(0),
    }
}

struct Dynamics {
    /// Net drift of the surplus, claims included.
    drift: f64,
    /// Drift of the continuous part: the net premium rate in the jump model.
    path_drift: f64,
    /// Volatility of the continuous part.
    vol: f64,
    /// Variance rate of the whole surplus, used for the default horizon.
    total_var: f64,
    rho_hat: f64,
}

fn dynamics(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<Dynamics> {
    let m = retention_moments(dist, &cfg.retention, None, spec)?;
    let drift = drift_from_moments(p, dist, &m);
    if !(drift > 0.0) {
        return Err(RuinError::NetProfitViolated { drift });
    }
    let total_var = p.beta * p.beta + p.lambda * m.e_r2;
    let rho_d = 2.0 * drift / total_var;
    let (path_drift, vol, rho_hat) = match cfg.model {
        SimModel::Diffusion => (drift, total_var.sqrt(), rho_d),
        SimModel::Classical => {
            let rho = match adjustment_for_retention(p, dist, &cfg.retention, spec) {
                Ok(r) => r.root,
                // without a Lundberg exponent fall back to the diffusion one
                Err(RuinError::AdjustmentNotFound { .. }) => rho_d,
                Err(e) => return Err(e),
            };
            (drift + p.lambda * m.e_r, p.beta, rho)
        }
    };
    Ok(Dynamics {
        drift,
        path_drift,
        vol,
        total_var,
        rho_hat,
    })
}

fn default_barrier(rho: f64, x0: f64) -> f64 {
    let k = (rho * x0 + (1.0 / BARRIER_LEVEL).ln()).floor() + 1.0;
    k / rho
}

/// T = u² with m·u² − 8s·u = B − x₀: the mean path reaches the barrier with
/// eight standard deviations to spare.
fn default_horizon(drift: f64, total_var: f64, barrier: f64, x0: f64) -> f64 {
    let s = total_var.sqrt();
    let gap = (barrier - x0).max(0.0);
    let u = (HORIZON_SDS * s + (HORIZON_SDS * HORIZON_SDS * total_var + 4.0 * drift * gap).sqrt())
        / (2.0 * drift);
    u * u
}

/// Brownian advance over `dt` from `x > 0`; `None` if the path ruins.
#[inline]
fn advance<R: Rng>(rng: &mut R, x: f64, drift: f64, vol: f64, dt: f64) -> Option<f64> {
    let z: f64 = StandardNormal.sample(rng);
    let next = x + drift * dt + vol * dt.sqrt() * z;
    if next <= 0.0 {
        return None;
    }
    let exponent = 2.0 * x * next / (vol * vol * dt);
    if exponent < 745.0 {
        let u: f64 = rng.random();
        if u < (-exponent).exp() {
            return None;
        }
    }
    Some(next)
}

struct PathSetup<'a> {
    model: SimModel,
    retention: &'a RetentionFunction,
    sampler: crate::model::ClaimSampler,
    lambda: f64,
    drift: f64,
    vol: f64,
    x0: f64,
    barrier: f64,
    horizon: f64,
    max_step: f64,
}

impl PathSetup<'_> {
    fn run<R: Rng>(&self, rng: &mut R) -> Outcome {
        let mut x = self.x0;
        if x <= 0.0 {
            return Outcome::Ruined;
        }
        if x >= self.barrier {
            return Outcome::Survived;
        }
        let mut t = 0.0;
        loop {
            let wait = match self.model {
                SimModel::Classical => {
                    let e: f64 = Exp1.sample(rng);
                    e / self.lambda
                }
                SimModel::Diffusion => f64::INFINITY,
            };
            let end = (t + wait).min(self.horizon);
            while t < end {
                let dt = (end - t).min(self.max_step);
                match advance(rng, x, self.drift, self.vol, dt) {
                    Some(next) => x = next,
                    None => return Outcome::Ruined,
                }
                t = if dt == end - t { end } else { t + dt };
                if x >= self.barrier {
                    return Outcome::Survived;
                }
            }
            if t >= self.horizon {
                return Outcome::Censored;
            }
            let y = self.sampler.sample(rng);
            x -= self.retention.eval(y);
            if x <= 0.0 {
                return Outcome::Ruined;
            }
        }
    }
}

fn run_paths(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<SimResult> {
    cfg.validate()?;
    p.check_ranges()?;
    dist.validate()?;
    let dynamics = dynamics(cfg, p, dist, spec)?;
    let barrier = cfg
        .barrier
        .unwrap_or_else(|| default_barrier(dynamics.rho_hat, cfg.x0));
    let horizon = cfg
        .horizon
        .unwrap_or_else(|| default_horizon(dynamics.drift, dynamics.total_var, barrier, cfg.x0));
    let max_step = match (cfg.max_step, cfg.model) {
        (Some(h), _) => h,
        (None, SimModel::Diffusion) => horizon / DIFFUSION_STEPS,
        (None, SimModel::Classical) => f64::INFINITY,
    };
    let setup = PathSetup {
        model: cfg.model,
        retention: &cfg.retention,
        sampler: dist.sampler()?,
        lambda: p.lambda,
        drift: dynamics.path_drift,
        vol: dynamics.vol,
        x0: cfg.x0,
        barrier,
        horizon,
        max_step,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg)?)
        .build()
        .map_err(|e| RuinError::ConfigError(format!("cannot start worker threads: {e}")))?;
    let seed = cfg.seed;
    let outcomes: Vec<Outcome> = pool.install(|| {
        (0..cfg.paths)
            .into_par_iter()
            .map(|i| setup.run(&mut path_rng(seed, i)))
            .collect()
    });

    let batch = cfg.batch_size.unwrap_or(cfg.paths);
    let mut running = Vec::new();
    let (mut ruined, mut censored) = (0u64, 0u64);
    for (i, o) in outcomes.iter().enumerate() {
        match o {
            Outcome::Ruined => ruined += 1,
            Outcome::Censored => censored += 1,
            Outcome::Survived => {}
        }
        let done = i as u64 + 1;
        if done.is_multiple_of(batch) || done == cfg.paths {
            let (est, se) = proportion(ruined, done);
            running.push(BatchEstimate {
                paths: done,
                ruined,
                estimate: est,
                std_error: se,
            });
        }
    }
    let (estimate, std_error) = proportion(ruined, cfg.paths);
    Ok(SimResult {
        estimate,
        std_error,
        ci_low: (estimate - 1.96 * std_error).max(0.0),
        ci_high: (estimate + 1.96 * std_error).min(1.0),
        paths: cfg.paths,
        ruined,
        censored,
        censored_fraction: censored as f64 / cfg.paths as f64,
        seed,
        barrier,
        horizon,
        rho_hat: dynamics.rho_hat,
        running,
    })
}

fn proportion(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Ruin probability of the jump-diffusion under a fixed retention.
pub fn simulate_classical(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<SimResult> {
    let cfg = SimConfig {
        model: SimModel::Classical,
        ..cfg.clone()
    };
    run_paths(&cfg, p, dist, spec)
}

/// Ruin probability of the diffusion approximation under a fixed retention.
pub fn simulate_diffusion(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<SimResult> {
    let cfg = SimConfig {
        model: SimModel::Diffusion,
        ..cfg.clone()
    };
    run_paths(&cfg, p, dist, spec)
}

/// Jump-diffusion simulation of the model scaled by `n`. The configured
/// retention acts on scaled claims.
pub fn simulate_scaled(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    n: f64,
    spec: &QuadratureSpec,
) -> Result<SimResult> {
    let s = scale_params(p, dist, n)?;
    simulate_classical(cfg, &s.params, &s.dist, spec)
}

/// Dispatches on the configured model.
pub fn simulate(
    cfg: &SimConfig,
    p: &ModelParams,
    dist: &ClaimDistribution,
    spec: &QuadratureSpec,
) -> Result<SimResult> {
    run_paths(cfg, p, dist, spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn setup() -> (ModelParams, ClaimDistribution) {
        (
            ModelParams::new(1.0, 1.6, 0.5, 0.5, 0.5).unwrap(),
            ClaimDistribution::exponential(1.0).unwrap(),
        )
    }

    #[test]
    fn zero_surplus_is_ruin() {
        let (p, d) = setup();
        let cfg = SimConfig::new(SimModel::Classical, RetentionFunction::Full, 0.0, 100, 1);
        assert_eq!(
            simulate_classical(&cfg, &p, &d, &spec()).unwrap().estimate,
            1.0
        );
    }

    #[test]
    fn start_at_barrier_is_survival() {
        let (p, d) = setup();
        let mut cfg = SimConfig::new(SimModel::Diffusion, RetentionFunction::Full, 5.0, 100, 1);
        cfg.barrier = Some(5.0);
        assert_eq!(
            simulate_diffusion(&cfg, &p, &d, &spec()).unwrap().estimate,
            0.0
        );
    }

    #[test]
    fn zero_retention_rejected_before_simulating() {
        let (p, d) = setup();
        let cfg = SimConfig::new(SimModel::Classical, RetentionFunction::Zero, 1.0, 10, 1);
        assert!(matches!(
            simulate_classical(&cfg, &p, &d, &spec()),
            Err(RuinError::NetProfitViolated { .. })
        ));
    }

    #[test]
    fn invalid_configs() {
        let (p, d) = setup();
        let mut cfg = SimConfig::new(SimModel::Classical, RetentionFunction::Full, 1.0, 0, 1);
        assert!(matches!(
            simulate(&cfg, &p, &d, &spec()),
            Err(RuinError::ConfigError(_))
        ));
        cfg.paths = 10;
        cfg.x0 = -1.0;
        assert!(matches!(
            simulate(&cfg, &p, &d, &spec()),
            Err(RuinError::ConfigError(_))
        ));
    }

    #[test]
    fn bridge_crossing_is_detected() {
        // driftless path from 0.01 over a long step: endpoints are almost
        // always positive, yet P(hit 0) = 2Φ(−0.001) ≈ 0.9992
        let mut rng = path_rng(7, 0);
        let ruined = (0..20_000)
            .filter(|_| advance(&mut rng, 0.01, 0.0, 1.0, 100.0).is_none())
            .count();
        assert!(ruined as f64 / 20_000.0 > 0.99);
    }

    #[test]
    fn same_seed_same_answer_across_threads() {
        let (p, d) = setup();
        let mut cfg = SimConfig::new(SimModel::Classical, RetentionFunction::Full, 1.0, 2000, 42);
        cfg.threads = Some(1);
        let a = simulate(&cfg, &p, &d, &spec()).unwrap();
        cfg.threads = Some(3);
        let b = simulate(&cfg, &p, &d, &spec()).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.ruined, b.ruined);
    }

    #[test]
    fn running_estimates_end_at_the_total() {
        let (p, d) = setup();
        let mut cfg = SimConfig::new(SimModel::Diffusion, RetentionFunction::Full, 1.0, 1000, 3);
        cfg.batch_size = Some(300);
        let r = simulate(&cfg, &p, &d, &spec()).unwrap();
        assert_eq!(r.running.len(), 4);
        assert_eq!(r.running.last().unwrap().estimate, r.estimate);
        let mut buf = Vec::new();
        r.write_running_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 5);
    }

    #[test]
    fn default_barrier_meets_level() {
        let rho = 0.7;
        let x0 = 2.0;
        let b = default_barrier(rho, x0);
        assert!((-rho * b).exp() < BARRIER_LEVEL * (-rho * x0).exp());
        assert!((-rho * (b - 1.0 / rho)).exp() >= BARRIER_LEVEL * (-rho * x0).exp());
    }
}
