use serde::{Deserialize, Serialize};

use super::ClaimDistribution;
use crate::classical::retention_hrj;
use crate::error::{Result, RuinError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    PiecewiseConstant,
}

/// Per-claim retained amount y ↦ R(y) ∈ [0, y].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetentionFunction {
    Full,
    Zero,
    QuotaShare {
        q: f64,
    },
    StopLoss {
        m: f64,
    },
    /// min((θ + ηy)/α, y).
    DiffusionOptimal {
        alpha: f64,
        theta: f64,
        eta: f64,
    },
    /// y below ln(1+θ)/ρ, otherwise the root R of (1+θ) + ηy − ηR = e^{ρR}.
    ClassicalOptimal {
        rho: f64,
        theta: f64,
        eta: f64,
    },
    /// Values on a grid. Linear tables extend past the last node with the
    /// last slope; a grid not starting at 0 is joined to the origin.
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

impl RetentionFunction {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(RuinError::InvalidRetention(m.into()));
        match self {
            RetentionFunction::Full | RetentionFunction::Zero => {}
            RetentionFunction::QuotaShare { q } => {
                if !(0.0..=1.0).contains(q) {
                    return fail("quota-share proportion must lie in [0, 1]");
                }
            }
            RetentionFunction::StopLoss { m } => {
                if !(*m >= 0.0) {
                    return fail("stop-loss deductible must be non-negative");
                }
            }
            RetentionFunction::DiffusionOptimal { alpha, theta, eta } => {
                if !(theta.is_finite() && eta.is_finite() && *theta >= 0.0 && *eta >= 0.0) {
                    return fail("loadings must be non-negative and finite");
                }
                if !(alpha.is_finite() && alpha > eta && *alpha > 0.0) {
                    return fail("alpha must be finite and exceed eta");
                }
            }
            RetentionFunction::ClassicalOptimal { rho, theta, eta } => {
                if !(theta.is_finite() && eta.is_finite() && *theta >= 0.0 && *eta >= 0.0) {
                    return fail("loadings must be non-negative and finite");
                }
                if !(rho.is_finite() && *rho > 0.0) {
                    return fail("adjustment coefficient must be positive and finite");
                }
            }
            RetentionFunction::Tabulated { grid, values, .. } => {
                if grid.len() != values.len() || grid.len() < 2 {
                    return fail("table needs at least two nodes and one value per node");
                }
                if grid.iter().chain(values).any(|v| !v.is_finite()) {
                    return fail("table entries must be finite");
                }
                if grid[0] < 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("grid must be non-negative and strictly increasing");
                }
                let tol = 1e-12;
                if grid
                    .iter()
                    .zip(values)
                    .any(|(g, v)| *v < -tol * g.max(1.0) || *v > g + tol * g.max(1.0))
                {
                    return fail("tabulated values must satisfy 0 <= R(y) <= y");
                }
            }
        }
        Ok(())
    }

    /// R(y); negative claims retain nothing.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match self {
            RetentionFunction::Full => y,
            RetentionFunction::Zero => 0.0,
            RetentionFunction::QuotaShare { q } => q * y,
            RetentionFunction::StopLoss { m } => y.min(*m),
            RetentionFunction::DiffusionOptimal { alpha, theta, eta } => {
                ((theta + eta * y) / alpha).min(y)
            }
            RetentionFunction::ClassicalOptimal { rho, theta, eta } => {
                retention_hrj(*rho, *theta, *eta, y)
            }
            RetentionFunction::Tabulated {
                grid,
                values,
                interpolation,
            } => tabulated(grid, values, *interpolation, y).clamp(0.0, y),
        }
    }

    /// Points where R is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RetentionFunction::StopLoss { m } => vec![*m],
            RetentionFunction::DiffusionOptimal { alpha, theta, eta } => {
                let k = theta / (alpha - eta);
                if k > 0.0 && k.is_finite() {
                    vec![k]
                } else {
                    vec![]
                }
            }
            RetentionFunction::ClassicalOptimal { rho, theta, .. } => {
                let k = theta.ln_1p() / rho;
                if k > 0.0 {
                    vec![k]
                } else {
                    vec![]
                }
            }
            RetentionFunction::Tabulated { grid, .. } => grid.clone(),
            _ => vec![],
        }
    }

    /// Largest r with E e^{rR(Y)} finite.
    pub fn mgf_radius(&self, dist: &ClaimDistribution) -> f64 {
        let r_inf = dist.mgf_radius();
        match self {
            RetentionFunction::Full => r_inf,
            RetentionFunction::Zero
            | RetentionFunction::StopLoss { .. }
            | RetentionFunction::ClassicalOptimal { .. } => f64::INFINITY,
            RetentionFunction::QuotaShare { q } => {
                if *q == 0.0 {
                    f64::INFINITY
                } else {
                    r_inf / q
                }
            }
            RetentionFunction::DiffusionOptimal { alpha, eta, .. } => {
                if *eta == 0.0 {
                    f64::INFINITY
                } else {
                    r_inf * alpha / eta
                }
            }
            RetentionFunction::Tabulated {
                grid,
                values,
                interpolation,
            } => {
                let n = grid.len();
                let slope = (values[n - 1] - values[n - 2]) / (grid[n - 1] - grid[n - 2]);
                if *interpolation == Interpolation::PiecewiseConstant || slope <= 0.0 {
                    f64::INFINITY
                } else {
                    r_inf / slope.min(1.0)
                }
            }
        }
    }

    /// The retention y ↦ R(√n·y)/√n of the scaled model.
    pub fn rescaled(&self, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(RuinError::InvalidRetention(format!(
                "scale factor must be positive, got {n}"
            )));
        }
        let k = n.sqrt();
        Ok(match self {
            RetentionFunction::StopLoss { m } => RetentionFunction::StopLoss { m: m / k },
            RetentionFunction::DiffusionOptimal { alpha, theta, eta } => {
                RetentionFunction::DiffusionOptimal {
                    alpha: *alpha,
                    theta: theta / k,
                    eta: *eta,
                }
            }
            RetentionFunction::ClassicalOptimal { rho, theta, eta } => {
                RetentionFunction::ClassicalOptimal {
                    rho: rho * k,
                    theta: *theta,
                    eta: eta * k,
                }
            }
            RetentionFunction::Tabulated {
                grid,
                values,
                interpolation,
            } => RetentionFunction::Tabulated {
                grid: grid.iter().map(|g| g / k).collect(),
                values: values.iter().map(|v| v / k).collect(),
                interpolation: *interpolation,
            },
            other => other.clone(),
        })
    }

    /// Linear table of this retention on `grid`, with the kinks added.
    pub fn tabulate(&self, grid: &[f64]) -> Result<Self> {
        let mut nodes: Vec<f64> = grid
            .iter()
            .copied()
            .chain(self.breakpoints())
            .chain(std::iter::once(0.0))
            .filter(|g| g.is_finite() && *g >= 0.0)
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let values = nodes.iter().map(|&y| self.eval(y)).collect();
        let t = RetentionFunction::Tabulated {
            grid: nodes,
            values,
            interpolation: Interpolation::Linear,
        };
        t.validate()?;
        Ok(t)
    }
}

fn tabulated(grid: &[f64], values: &[f64], rule: Interpolation, y: f64) -> f64 {
    let n = grid.len();
    let i = grid.partition_point(|g| *g <= y);
    match rule {
        Interpolation::PiecewiseConstant => {
            if i == 0 {
                0.0
            } else {
                values[i - 1]
            }
        }
        Interpolation::Linear => {
            let (x0, v0, x1, v1) = if i == 0 {
                (0.0, 0.0, grid[0], values[0])
            } else if i >= n {
                (grid[n - 2], values[n - 2], grid[n - 1], values[n - 1])
            } else {
                (grid[i - 1], values[i - 1], grid[i], values[i])
            };
            if x1 == x0 {
                v0
            } else {
                v0 + (v1 - v0) * (y - x0) / (x1 - x0)
            }
        }
    }
}
