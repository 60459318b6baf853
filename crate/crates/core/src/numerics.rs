//! Deterministic quadrature and bracketed root finding shared by every solver.
//!
//! Integration uses fixed-order Gauss–Legendre panels with global adaptive
//! bisection: each panel carries the difference between its single-panel
//! estimate and the sum over its two halves as an error estimate, and the
//! panel with the largest estimate is split until the summed estimate meets
//! the tolerance. Semi-infinite integrals are split at caller-declared
//! breakpoints and continued past the bulk of the integrand on geometrically
//! growing panels until the panel contributions are negligible.
//!
//! Root finding is Brent's method (inverse quadratic / secant steps guarded by
//! bisection) on a sign-changing bracket, with optional geometric bracket
//! expansion for monotone functions.

use std::sync::LazyLock;

use crate::error::{Result, RuinError};

const GAUSS_ORDER: usize = 15;

static GAUSS_LEGENDRE: LazyLock<Vec<(f64, f64)>> = LazyLock::new(|| gauss_legendre(GAUSS_ORDER));

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi's initial guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Survival level that marks the end of the bulk of a claim distribution.
    pub tail_survival: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-11,
            rel_tol: 1e-10,
            tail_survival: 1e-14,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(RuinError::NumericalFailure(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if !(self.tail_survival > 0.0 && self.tail_survival < 1.0) {
            return Err(RuinError::NumericalFailure(
                "tail survival threshold must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

fn gauss_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GAUSS_LEGENDRE
        .iter()
        .map(|&(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    error: f64,
}

impl Panel {
    fn new<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64) -> Self {
        let m = 0.5 * (a + b);
        let left = gauss_panel(f, a, m);
        let right = gauss_panel(f, m, b);
        let mut error = (left + right - whole).abs();
        if m <= a || m >= b {
            // no representable split remains
            error = 0.0;
        }
        Self {
            a,
            b,
            left,
            right,
            error,
        }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(RuinError::NumericalFailure(format!(
            "finite integration requested over [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate(f, b, a, spec).map(|v| -v);
    }
    let whole = gauss_panel(&f, a, b);
    let mut panels = vec![Panel::new(&f, a, b, whole)];
    let mut subdivisions = 0usize;
    loop {
        let total: f64 = panels.iter().map(Panel::value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            return Err(RuinError::DistributionUnsupported(format!(
                "integrand is not finite on [{a}, {b}]"
            )));
        }
        if error <= spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        if subdivisions >= spec.max_subdivisions {
            return Err(RuinError::QuadratureNoConvergence {
                subdivisions,
                error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        panels.push(Panel::new(&f, p.a, m, p.left));
        panels.push(Panel::new(&f, m, p.b, p.right));
        subdivisions += 1;
    }
}

/// Integral of `f` over [0, ∞).
///
/// The interval [0, `extent`] is integrated piecewise between the sorted
/// `breakpoints`; beyond `extent` the integral continues on doubling panels
/// (still split at breakpoints) until a panel past the last breakpoint
/// contributes less than a tenth of the tolerance.
pub fn integrate_semiinfinite<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    extent: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > 0.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let last_cut = cuts.last().copied().unwrap_or(0.0);
    let extent = if extent.is_finite() && extent > 0.0 {
        extent
    } else {
        1.0
    };

    let mut total = integrate_pieces(&f, 0.0, extent, &cuts, spec)?;
    let mut a = extent;
    let mut width = extent;
    for _ in 0..256 {
        let b = a + width;
        let piece = integrate_pieces(&f, a, b, &cuts, spec)?;
        total += piece;
        if a >= last_cut && piece.abs() <= 0.1 * spec.abs_tol.max(spec.rel_tol * total.abs()) {
            return Ok(total);
        }
        a = b;
        width *= 2.0;
        if !a.is_finite() {
            break;
        }
    }
    Err(RuinError::QuadratureNoConvergence {
        subdivisions: 256,
        error: f64::NAN,
    })
}

fn integrate_pieces<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    cuts: &[f64],
    spec: &QuadratureSpec,
) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    for &c in cuts.iter().filter(|&&c| c > a && c < b) {
        total += integrate(f, lo, c, spec)?;
        lo = c;
    }
    total += integrate(f, lo, b, spec)?;
    Ok(total)
}

/// Bracket and tolerances for [`find_root_monotone`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    pub lo: f64,
    pub hi: f64,
    pub x_tol: f64,
    pub f_tol: f64,
    pub max_iter: usize,
    /// How many times the upper end may be pushed outward when `f(lo)` and
    /// `f(hi)` share a sign.
    pub max_expansions: usize,
    /// Expansion approaches this value geometrically instead of doubling.
    pub upper_limit: Option<f64>,
}

impl RootSpec {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            x_tol: 1e-12,
            f_tol: 1e-10,
            max_iter: 200,
            max_expansions: 0,
            upper_limit: None,
        }
    }

    pub fn x_tol(mut self, tol: f64) -> Self {
        self.x_tol = tol;
        self
    }

    pub fn f_tol(mut self, tol: f64) -> Self {
        self.f_tol = tol;
        self
    }

    pub fn expand(mut self, max_expansions: usize, upper_limit: Option<f64>) -> Self {
        self.max_expansions = max_expansions;
        self.upper_limit = upper_limit;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub root: f64,
    pub residual: f64,
    pub iterations: usize,
    pub expansions: usize,
}

/// Root of a continuous function that changes sign on the bracket.
///
/// Monotone callers may ask for the upper end to be expanded; the lower end
/// then moves to the previous upper end so the bracket stays tight.
pub fn find_root_monotone<F>(mut f: F, spec: &RootSpec) -> Result<SolveReport>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(spec.lo < spec.hi) {
        return Err(RuinError::NumericalFailure(format!(
            "root bracket [{}, {}] is empty",
            spec.lo, spec.hi
        )));
    }
    let mut lo = spec.lo;
    let mut hi = spec.hi;
    let mut f_lo = f(lo)?;
    if f_lo == 0.0 {
        return Ok(SolveReport {
            root: lo,
            residual: 0.0,
            iterations: 0,
            expansions: 0,
        });
    }
    let mut f_hi = f(hi)?;
    let mut expansions = 0;
    while f_hi != 0.0 && f_lo.signum() == f_hi.signum() {
        if expansions >= spec.max_expansions {
            return Err(RuinError::BracketFailure { lo, hi });
        }
        let next = match spec.upper_limit {
            Some(limit) => hi + 0.5 * (limit - hi),
            None => hi + (hi - spec.lo).max(f64::MIN_POSITIVE),
        };
        if !next.is_finite() || next <= hi {
            return Err(RuinError::BracketFailure { lo, hi });
        }
        lo = hi;
        f_lo = f_hi;
        hi = next;
        f_hi = f(hi)?;
        expansions += 1;
    }
    if f_hi == 0.0 {
        return Ok(SolveReport {
            root: hi,
            residual: 0.0,
            iterations: 0,
            expansions,
        });
    }
    let (root, residual, iterations) = brent(&mut f, lo, hi, f_lo, f_hi, spec)?;
    if !(residual.abs() < spec.f_tol) {
        return Err(RuinError::NumericalFailure(format!(
            "root {root} has residual {residual:e} above tolerance {:e}",
            spec.f_tol
        )));
    }
    Ok(SolveReport {
        root,
        residual,
        iterations,
        expansions,
    })
}

fn brent<F>(
    f: &mut F,
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_hi: f64,
    spec: &RootSpec,
) -> Result<(f64, f64, usize)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f_lo, f_hi);
    let (mut c, mut fc) = (b, fb);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=spec.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * spec.x_tol;
        let xm = 0.5 * (c - b);
        if fb == 0.0 || (xm.abs() <= tol1 && fb.abs() < spec.f_tol) {
            return Ok((b, fb, iter));
        }
        let forced = xm.abs() <= tol1;
        if forced {
            // x-tolerance met but the residual is not: keep bisecting
            let mid = b + xm;
            if mid == b || mid == c {
                return Ok((b, fb, iter));
            }
            d = xm;
            e = d;
        } else if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if forced || d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
        if !fb.is_finite() {
            return Err(RuinError::NumericalFailure(format!(
                "root function is not finite at {b}"
            )));
        }
    }
    Ok((b, fb, spec.max_iter))
}

/// e^x − 1 − x without cancellation near zero.
pub fn exp_m1_m_x(x: f64) -> f64 {
    if x.abs() < 0.25 {
        let mut term = 0.5 * x * x;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs() {
            k += 1.0;
            term *= x / k;
            sum += term;
        }
        sum
    } else {
        x.exp_m1() - x
    }
}

/// (e^x − 1)/x, equal to 1 at x = 0.
pub fn exprel(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.abs() < 0.25 {
        1.0 + exp_m1_m_x(x) / x
    } else {
        x.exp_m1() / x
    }
}
