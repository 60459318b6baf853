use ruinopt::classical::{adjustment_for_retention, solve_rho_j};
use ruinopt::diffusion::{rho_d_of_r, solve_alpha_star};
use ruinopt::scaling::appendix_bounds;
use ruinopt::simulate::{
    simulate_classical, simulate_diffusion, simulate_scaled, SimConfig, SimModel,
};
use ruinopt::{ClaimDistribution, ModelParams, QuadratureSpec, RetentionFunction};

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn setup() -> (ModelParams, ClaimDistribution) {
    (
        ModelParams::new(1.0, 2.5, 1.0, 1.0, 1.0).unwrap(),
        ClaimDistribution::exponential(1.0).unwrap(),
    )
}

#[test]
fn unit_scale_matches_classical_bitwise() {
    let (p, d) = setup();
    let sol = solve_rho_j(&p, &d, &spec()).unwrap();
    let cfg = SimConfig::new(SimModel::Classical, sol.retention.clone(), 1.0, 5000, 21);
    let a = simulate_classical(&cfg, &p, &d, &spec()).unwrap();
    let b = simulate_scaled(&cfg, &p, &d, 1.0, &spec()).unwrap();
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.ruined, b.ruined);
}

#[test]
fn full_retention_between_solution_bounds() {
    let (p, d) = setup();
    let rho_y = adjustment_for_retention(&p, &d, &RetentionFunction::Full, &spec())
        .unwrap()
        .root;
    let x0 = 1.5;
    let b = appendix_bounds(&p, rho_y, x0);
    let cfg = SimConfig::new(SimModel::Classical, RetentionFunction::Full, x0, 40_000, 22);
    let r = simulate_classical(&cfg, &p, &d, &spec()).unwrap();
    assert!(r.estimate >= b.subsolution - 3.0 * r.std_error);
    assert!(
        r.estimate <= b.supersolution + 3.0 * r.std_error,
        "{r:?} vs {b:?}"
    );
}

#[test]
fn diffusion_full_retention_matches_closed_form() {
    let (p, d) = setup();
    let rho = rho_d_of_r(&p, &d, &RetentionFunction::Full, &spec()).unwrap();
    let x0 = 1.0;
    let cfg = SimConfig::new(SimModel::Diffusion, RetentionFunction::Full, x0, 40_000, 23);
    let r = simulate_diffusion(&cfg, &p, &d, &spec()).unwrap();
    let target = (-rho * x0).exp();
    assert!(
        (r.estimate - target).abs() <= 3.0 * r.std_error,
        "{} vs {target}",
        r.estimate
    );
}

#[test]
fn estimates_fall_with_initial_surplus() {
    let (p, d) = setup();
    let sol = solve_alpha_star(&p, &d, &spec()).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for x0 in [0.25, 0.5, 1.0, 2.0, 3.0] {
        let cfg = SimConfig::new(SimModel::Classical, sol.retention.clone(), x0, 20_000, 24);
        let r = simulate_classical(&cfg, &p, &d, &spec()).unwrap();
        if let Some((e, se)) = prev {
            assert!(r.estimate <= e + 3.0 * (se * se + r.std_error * r.std_error).sqrt());
        }
        prev = Some((r.estimate, r.std_error));
    }
}

#[test]
fn halving_the_advance_interval_leaves_estimate_unchanged() {
    // the two runs use different draws, so compare against the standard
    // error of the difference
    let (p, d) = setup();
    let sol = solve_rho_j(&p, &d, &spec()).unwrap();
    let mut cfg = SimConfig::new(SimModel::Classical, sol.retention.clone(), 1.0, 40_000, 25);
    cfg.max_step = Some(0.2);
    let a = simulate_classical(&cfg, &p, &d, &spec()).unwrap();
    cfg.max_step = Some(0.1);
    let b = simulate_classical(&cfg, &p, &d, &spec()).unwrap();
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!(
        (a.estimate - b.estimate).abs() <= 3.0 * se,
        "{} vs {}",
        a.estimate,
        b.estimate
    );
}

#[test]
fn scaled_estimates_approach_the_diffusion_value() {
    let (p, d) = setup();
    let diff = solve_alpha_star(&p, &d, &spec()).unwrap();
    let x0 = 1.0;
    let target = diff.psi(x0);
    let mut prev: Option<(f64, f64)> = None;
    for n in [1.0, 4.0, 16.0] {
        let s = ruinopt::scaling::scale_params(&p, &d, n).unwrap();
        let sol = solve_rho_j(&s.params, &s.dist, &spec()).unwrap();
        let cfg = SimConfig::new(SimModel::Classical, sol.retention.clone(), x0, 40_000, 26);
        let r = simulate_scaled(&cfg, &p, &d, n, &spec()).unwrap();
        let gap = (r.estimate - target).abs();
        if let Some((g, se)) = prev {
            assert!(
                gap <= g + 3.0 * (se * se + r.std_error * r.std_error).sqrt(),
                "n = {n}"
            );
        }
        prev = Some((gap, r.std_error));
    }
}

#[test]
fn censoring_is_reported() {
    let (p, d) = setup();
    let mut cfg = SimConfig::new(SimModel::Diffusion, RetentionFunction::Full, 1.0, 2000, 27);
    cfg.horizon = Some(0.5);
    let r = simulate_diffusion(&cfg, &p, &d, &spec()).unwrap();
    assert!(r.censored > 0);
    assert_eq!(r.censored_fraction, r.censored as f64 / 2000.0);
    assert!(r.ci_low <= r.estimate && r.estimate <= r.ci_high);
}
