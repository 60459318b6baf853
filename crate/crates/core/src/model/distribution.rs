use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Uniform};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Result, RuinError};
use crate::numerics::{integrate, integrate_semiinfinite, QuadratureSpec};

/// Light-tailed claim severity law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClaimDistribution {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { b: f64 },
    Empirical { atoms: Vec<f64>, weights: Vec<f64> },
}

impl ClaimDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        let d = ClaimDistribution::Exponential { rate };
        d.validate()?;
        Ok(d)
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        let d = ClaimDistribution::Gamma { shape, rate };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(b: f64) -> Result<Self> {
        let d = ClaimDistribution::Uniform { b };
        d.validate()?;
        Ok(d)
    }

    /// Finite law on positive atoms; weights are normalised to sum to one.
    pub fn empirical(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() || atoms.is_empty() {
            return Err(RuinError::InvalidDistribution(
                "empirical law needs equally many atoms and weights, at least one".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(RuinError::InvalidDistribution(
                "empirical weights must have a positive finite sum".into(),
            ));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let d = ClaimDistribution::Empirical {
            atoms: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RuinError::InvalidDistribution(msg.into()));
        match self {
            ClaimDistribution::Exponential { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad("exponential rate must be positive and finite");
                }
            }
            ClaimDistribution::Gamma { shape, rate } => {
                if !(shape.is_finite() && *shape > 0.0 && rate.is_finite() && *rate > 0.0) {
                    return bad("gamma shape and rate must be positive and finite");
                }
            }
            ClaimDistribution::Uniform { b } => {
                if !(b.is_finite() && *b > 0.0) {
                    return bad("uniform upper end must be positive and finite");
                }
            }
            ClaimDistribution::Empirical { atoms, weights } => {
                if atoms.is_empty() || atoms.len() != weights.len() {
                    return bad("empirical law needs equally many atoms and weights");
                }
                if atoms.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return bad("empirical atoms must be positive and finite");
                }
                if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("empirical weights must be positive");
                }
                if atoms.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("empirical atoms must be distinct and sorted");
                }
                if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return bad("empirical weights must sum to one");
                }
            }
        }
        Ok(())
    }

    /// P(Y > y).
    pub fn survival(&self, y: f64) -> f64 {
        if y < 0.0 {
            return 1.0;
        }
        match self {
            ClaimDistribution::Exponential { rate } => (-rate * y).exp(),
            ClaimDistribution::Gamma { shape, rate } => {
                if y == 0.0 {
                    1.0
                } else {
                    gamma_ur(*shape, rate * y)
                }
            }
            ClaimDistribution::Uniform { b } => (1.0 - y / b).max(0.0),
            ClaimDistribution::Empirical { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .filter(|(a, _)| **a > y)
                .map(|(_, w)| w)
                .sum(),
        }
    }

    /// Log density (log mass for the empirical law; −∞ off the support).
    pub fn ln_density(&self, y: f64) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => {
                if y < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * y
                }
            }
            ClaimDistribution::Gamma { shape, rate } => {
                if y <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    shape * rate.ln() + (shape - 1.0) * y.ln() - rate * y - ln_gamma(*shape)
                }
            }
            ClaimDistribution::Uniform { b } => {
                if (0.0..=*b).contains(&y) {
                    -b.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            ClaimDistribution::Empirical { atoms, weights } => atoms
                .iter()
                .position(|a| *a == y)
                .map_or(f64::NEG_INFINITY, |i| weights[i].ln()),
        }
    }

    pub fn density(&self, y: f64) -> f64 {
        self.ln_density(y).exp()
    }

    pub fn mean(&self) -> f64 {
        self.raw_moment(1)
    }

    /// E Y², written σ² throughout.
    pub fn second_moment(&self) -> f64 {
        self.raw_moment(2)
    }

    pub fn third_moment(&self) -> f64 {
        self.raw_moment(3)
    }

    fn raw_moment(&self, k: i32) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } => {
                (1..=k).map(f64::from).product::<f64>() / rate.powi(k)
            }
            ClaimDistribution::Gamma { shape, rate } => {
                (0..k).map(|j| shape + f64::from(j)).product::<f64>() / rate.powi(k)
            }
            ClaimDistribution::Uniform { b } => b.powi(k) / f64::from(k + 1),
            ClaimDistribution::Empirical { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| w * a.powi(k)).sum()
            }
        }
    }

    /// Radius of convergence r_∞ of the moment generating function.
    pub fn mgf_radius(&self) -> f64 {
        match self {
            ClaimDistribution::Exponential { rate } | ClaimDistribution::Gamma { rate, .. } => {
                *rate
            }
            ClaimDistribution::Uniform { .. } | ClaimDistribution::Empirical { .. } => {
                f64::INFINITY
            }
        }
    }

    /// E e^{rY}.
    pub fn mgf(&self, r: f64) -> Result<f64> {
        let radius = self.mgf_radius();
        if r >= radius {
            return Err(RuinError::MgfDomainExceeded { r, radius });
        }
        Ok(match self {
            ClaimDistribution::Exponential { rate } => rate / (rate - r),
            ClaimDistribution::Gamma { shape, rate } => (rate / (rate - r)).powf(*shape),
            ClaimDistribution::Uniform { b } => crate::numerics::exprel(r * b),
            ClaimDistribution::Empirical { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .map(|(a, w)| w * (r * a).exp())
                .sum(),
        })
    }

    /// Smallest y with P(Y ≤ y) ≥ u.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            ClaimDistribution::Exponential { rate } => -(-u).ln_1p() / rate,
            ClaimDistribution::Gamma { .. } => self.survival_point(1.0 - u),
            ClaimDistribution::Uniform { b } => u * b,
            ClaimDistribution::Empirical { atoms, weights } => {
                let mut acc = 0.0;
                for (a, w) in atoms.iter().zip(weights) {
                    acc += w;
                    if acc >= u - 1e-15 {
                        return *a;
                    }
                }
                *atoms.last().unwrap_or(&0.0)
            }
        }
    }

    /// Smallest y with S_Y(y) ≤ s, for s ∈ (0, 1).
    ///
    /// Working with the survival level directly keeps far-tail points such as
    /// S = 10⁻¹⁴ accurate where 1 − s would round.
    pub fn survival_point(&self, s: f64) -> f64 {
        if s >= 1.0 {
            return 0.0;
        }
        match self {
            ClaimDistribution::Exponential { rate } => -s.max(f64::MIN_POSITIVE).ln() / rate,
            ClaimDistribution::Uniform { b } => b * (1.0 - s.max(0.0)),
            ClaimDistribution::Empirical { atoms, weights } => {
                let mut tail = 1.0;
                for (a, w) in atoms.iter().zip(weights) {
                    tail -= w;
                    if tail <= s + 1e-15 {
                        return *a;
                    }
                }
                *atoms.last().unwrap_or(&0.0)
            }
            ClaimDistribution::Gamma { .. } => {
                let s = s.max(1e-300);
                let mut hi = self.mean().max(1e-12);
                while self.survival(hi) > s {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.survival(mid) > s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// Upper end of the support (∞ for unbounded laws).
    pub fn support_end(&self) -> f64 {
        match self {
            ClaimDistribution::Exponential { .. } | ClaimDistribution::Gamma { .. } => {
                f64::INFINITY
            }
            ClaimDistribution::Uniform { b } => *b,
            ClaimDistribution::Empirical { atoms, .. } => *atoms.last().unwrap_or(&0.0),
        }
    }

    /// Point beyond which the survival function is below the quadrature tail level.
    pub fn bulk_extent(&self, spec: &QuadratureSpec) -> f64 {
        self.survival_point(spec.tail_survival)
    }

    /// ∫ f(y, ln p(y)) dy over the support, where `f` returns the integrand
    /// φ(y)p(y) reconstructed from the log density. For the empirical law this
    /// is the exact sum Σ f(a_i, ln w_i).
    pub fn integrate_density<F>(
        &self,
        f: F,
        breakpoints: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        let value = match self {
            ClaimDistribution::Empirical { atoms, weights } => {
                atoms.iter().zip(weights).map(|(a, w)| f(*a, w.ln())).sum()
            }
            ClaimDistribution::Uniform { b } => {
                let ln_p = -b.ln();
                let mut cuts: Vec<f64> = breakpoints
                    .iter()
                    .copied()
                    .filter(|c| *c > 0.0 && c < b)
                    .collect();
                cuts.sort_by(f64::total_cmp);
                cuts.push(*b);
                let mut lo = 0.0;
                let mut total = 0.0;
                for c in cuts {
                    total += integrate(|y| f(y, ln_p), lo, c, spec)?;
                    lo = c;
                }
                total
            }
            _ => integrate_semiinfinite(
                |y| {
                    let lp = self.ln_density(y);
                    if lp == f64::NEG_INFINITY {
                        0.0
                    } else {
                        f(y, lp)
                    }
                },
                breakpoints,
                self.bulk_extent(spec),
                spec,
            )?,
        };
        finite(value)
    }

    /// E φ(Y) for a function of moderate growth.
    pub fn expect<F>(&self, phi: F, breakpoints: &[f64], spec: &QuadratureSpec) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_density(
            |y, lp| {
                let v = phi(y);
                if v == 0.0 {
                    0.0
                } else {
                    v * lp.exp()
                }
            },
            breakpoints,
            spec,
        )
    }

    /// ∫₀^∞ f(y) S_Y(y) dy.
    pub fn integrate_survival<F>(
        &self,
        f: F,
        breakpoints: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_survival_over(f, 0.0, f64::INFINITY, breakpoints, spec)
    }

    /// ∫_a^b f(y) S_Y(y) dy for 0 ≤ a ≤ b ≤ ∞.
    pub fn integrate_survival_over<F>(
        &self,
        f: F,
        a: f64,
        b: f64,
        breakpoints: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<f64>
    where
        F: Fn(f64) -> f64,
    {
        let b = b.min(self.support_end());
        if !(b > a) {
            return Ok(0.0);
        }
        let mut cuts: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|c| c.is_finite() && *c > a && *c < b)
            .collect();
        if let ClaimDistribution::Empirical { atoms, .. } = self {
            // S is a step function: integrate piecewise between atoms
            cuts.extend(atoms.iter().copied().filter(|x| *x > a && *x < b));
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let g = |y: f64| {
            let s = self.survival(y);
            if s == 0.0 {
                0.0
            } else {
                f(y) * s
            }
        };
        let value = if b.is_finite() {
            let mut lo = a;
            let mut total = 0.0;
            for c in cuts.iter().copied().chain(std::iter::once(b)) {
                total += match self {
                    ClaimDistribution::Empirical { .. } => {
                        // constant survival on the open piece
                        let s = self.survival(0.5 * (lo + c));
                        if s == 0.0 {
                            0.0
                        } else {
                            s * integrate(&f, lo, c, spec)?
                        }
                    }
                    _ => integrate(g, lo, c, spec)?,
                };
                lo = c;
            }
            total
        } else {
            let shifted: Vec<f64> = cuts.iter().map(|c| c - a).collect();
            let extent = (self.bulk_extent(spec) - a).max(self.mean());
            integrate_semiinfinite(|z| g(a + z), &shifted, extent, spec)?
        };
        finite(value)
    }

    /// ∫ f(z, ln q_d(z)) dz where q_d is the density of Z_d = (Y − d | Y > d).
    pub fn integrate_excess<F>(&self, d: f64, f: F, spec: &QuadratureSpec) -> Result<f64>
    where
        F: Fn(f64, f64) -> f64,
    {
        let tail = self.survival(d);
        if tail <= 0.0 {
            return Err(RuinError::NumericalFailure(format!(
                "excess law undefined beyond the support at d = {d}"
            )));
        }
        let ln_tail = tail.ln();
        let value = match self {
            ClaimDistribution::Exponential { rate } => integrate_semiinfinite(
                |z| f(z, rate.ln() - rate * z),
                &[],
                -spec.tail_survival.ln() / rate,
                spec,
            )?,
            ClaimDistribution::Empirical { atoms, weights } => atoms
                .iter()
                .zip(weights)
                .filter(|(a, _)| **a > d)
                .map(|(a, w)| f(a - d, w.ln() - ln_tail))
                .sum(),
            ClaimDistribution::Uniform { b } => {
                let ln_q = -(b - d).ln();
                integrate(|z| f(z, ln_q), 0.0, b - d, spec)?
            }
            ClaimDistribution::Gamma { .. } => {
                let extent = (self.survival_point(tail * spec.tail_survival) - d).max(self.mean());
                integrate_semiinfinite(
                    |z| {
                        let lp = self.ln_density(d + z);
                        if lp == f64::NEG_INFINITY {
                            0.0
                        } else {
                            f(z, lp - ln_tail)
                        }
                    },
                    &[],
                    extent,
                    spec,
                )?
            }
        };
        finite(value)
    }

    /// E Z_d.
    pub fn excess_mean(&self, d: f64, spec: &QuadratureSpec) -> Result<f64> {
        match self {
            ClaimDistribution::Exponential { rate } => Ok(1.0 / rate),
            ClaimDistribution::Uniform { b } => Ok(0.5 * (b - d)),
            _ => self.integrate_excess(d, |z, lq| z * lq.exp(), spec),
        }
    }

    /// E(Z_d² e^{sZ_d}) for s below the MGF radius.
    pub fn excess_second_exp_moment(&self, d: f64, s: f64, spec: &QuadratureSpec) -> Result<f64> {
        let radius = self.mgf_radius();
        if s >= radius {
            return Err(RuinError::MgfDomainExceeded { r: s, radius });
        }
        match self {
            ClaimDistribution::Exponential { rate } => Ok(2.0 * rate / (rate - s).powi(3)),
            _ => self.integrate_excess(d, |z, lq| z * z * (s * z + lq).exp(), spec),
        }
    }

    /// Law of Y/√n.
    pub fn scaled(&self, n: f64) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(RuinError::InvalidDistribution(format!(
                "scale factor must be positive, got {n}"
            )));
        }
        let k = n.sqrt();
        Ok(match self {
            ClaimDistribution::Exponential { rate } => {
                ClaimDistribution::Exponential { rate: rate * k }
            }
            ClaimDistribution::Gamma { shape, rate } => ClaimDistribution::Gamma {
                shape: *shape,
                rate: rate * k,
            },
            ClaimDistribution::Uniform { b } => ClaimDistribution::Uniform { b: b / k },
            ClaimDistribution::Empirical { atoms, weights } => ClaimDistribution::Empirical {
                atoms: atoms.iter().map(|a| a / k).collect(),
                weights: weights.clone(),
            },
        })
    }

    pub fn sampler(&self) -> Result<ClaimSampler> {
        self.validate()?;
        let err = |e: String| RuinError::InvalidDistribution(e);
        Ok(match self {
            ClaimDistribution::Exponential { rate } => {
                ClaimSampler::Exponential(Exp::new(*rate).map_err(|e| err(e.to_string()))?)
            }
            ClaimDistribution::Gamma { shape, rate } => {
                ClaimSampler::Gamma(Gamma::new(*shape, 1.0 / rate).map_err(|e| err(e.to_string()))?)
            }
            ClaimDistribution::Uniform { b } => {
                ClaimSampler::Uniform(Uniform::new(0.0, *b).map_err(|e| err(e.to_string()))?)
            }
            ClaimDistribution::Empirical { atoms, weights } => {
                let mut acc = 0.0;
                let cumulative = weights
                    .iter()
                    .map(|w| {
                        acc += w;
                        acc
                    })
                    .collect();
                ClaimSampler::Empirical {
                    atoms: atoms.clone(),
                    cumulative,
                }
            }
        })
    }
}

fn finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RuinError::DistributionUnsupported(format!(
            "integral evaluated to {v}"
        )))
    }
}

/// Pre-built sampler for a [`ClaimDistribution`].
#[derive(Debug, Clone)]
pub enum ClaimSampler {
    Exponential(Exp<f64>),
    Gamma(Gamma<f64>),
    Uniform(Uniform<f64>),
    Empirical {
        atoms: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

impl Distribution<f64> for ClaimSampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ClaimSampler::Exponential(d) => d.sample(rng),
            ClaimSampler::Gamma(d) => d.sample(rng),
            ClaimSampler::Uniform(d) => d.sample(rng),
            ClaimSampler::Empirical { atoms, cumulative } => {
                let u: f64 = rng.random::<f64>() * cumulative.last().copied().unwrap_or(1.0);
                let i = cumulative.partition_point(|c| *c <= u);
                atoms[i.min(atoms.len() - 1)]
            }
        }
    }
}
