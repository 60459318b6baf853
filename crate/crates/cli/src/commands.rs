//! One pipeline per subcommand. Each returns the JSON record and CSV tables
//! without touching the file system.

use ruinopt::classical::{asymptote_g, crossing_point, eta0_classical, solve_rho_j_with};
use ruinopt::diffusion::{eta0_deductible, solve_alpha_star, tet0_alpha, DiffusionSolution};
use ruinopt::scaling::{
    appendix_bounds, constant_c, convergence_report, delta_and_n, log_log_slope, psi_bounds,
    rho_j_scaled, scale_params, DEFAULT_EPS,
};
use ruinopt::simulate::{simulate_diffusion, simulate_scaled, SimConfig, SimModel};
use ruinopt::{ClaimDistribution, QuadratureSpec};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::output::{Output, Table};
use crate::CliError;

pub const DEFAULT_X_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 4.0, 8.0];
pub const DEFAULT_N_LIST: [f64; 6] = [4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0];
const DEFAULT_Y_POINTS: usize = 101;
const DEFAULT_PATHS: u64 = 100_000;

pub const DIFFUSION_RETENTION: &[&str] = &["y", "R_D"];
pub const CLASSICAL_RETENTION: &[&str] = &["y", "hRJ", "g", "R_D"];
pub const SCALING: &[&str] = &["n", "rho_J_n", "lower", "upper", "retention_dev"];
pub const SIMULATE_RUNNING: &[&str] = &["paths", "ruined", "estimate", "std_error"];
pub const BOUNDS: &[&str] = &[
    "x",
    "psi_D",
    "lower",
    "upper",
    "lundberg_upper",
    "supersolution",
    "subsolution",
];
pub const RETENTION_TABLE: &[&str] = &["y", "R_D", "hRJ", "g", "difference"];

struct Ctx<'a> {
    cfg: &'a RunConfig,
    spec: QuadratureSpec,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig) -> Result<Self, CliError> {
        let spec = cfg.quadrature();
        spec.validate()?;
        cfg.claims.validate()?;
        cfg.params.validate(&cfg.claims)?;
        Ok(Self { cfg, spec })
    }

    fn dist(&self) -> &ClaimDistribution {
        &self.cfg.claims
    }

    fn diffusion(&self) -> Result<DiffusionSolution, CliError> {
        Ok(solve_alpha_star(&self.cfg.params, self.dist(), &self.spec)?)
    }

    fn x_grid(&self) -> Result<Vec<f64>, CliError> {
        let g = self
            .cfg
            .options
            .x_grid
            .clone()
            .unwrap_or(DEFAULT_X_GRID.to_vec());
        check_grid("x_grid", &g)?;
        Ok(g)
    }

    /// Evenly spaced up to the 1 − 10⁻⁶ quantile, with the given kinks added.
    fn y_grid(&self, kinks: &[f64]) -> Result<Vec<f64>, CliError> {
        if let Some(g) = &self.cfg.options.y_grid {
            check_grid("y_grid", g)?;
            return Ok(g.clone());
        }
        let top = self.dist().survival_point(1e-6);
        let mut g: Vec<f64> = (0..DEFAULT_Y_POINTS)
            .map(|i| top * i as f64 / (DEFAULT_Y_POINTS - 1) as f64)
            .collect();
        g.extend(
            kinks
                .iter()
                .filter(|k| k.is_finite() && **k > 0.0 && **k < top),
        );
        g.sort_by(f64::total_cmp);
        g.dedup();
        Ok(g)
    }

    fn n(&self) -> Result<f64, CliError> {
        let n = self.cfg.options.n.unwrap_or(1.0);
        if !(n.is_finite() && n >= 1.0) {
            return Err(CliError::Config(format!(
                "scale factor n must be at least 1, got {n}"
            )));
        }
        Ok(n)
    }

    fn eps(&self) -> Result<f64, CliError> {
        let e = self.cfg.options.eps.unwrap_or(DEFAULT_EPS);
        if !(e.is_finite() && e > 0.0) {
            return Err(CliError::Config(format!("eps must be positive, got {e}")));
        }
        Ok(e)
    }
}

fn check_grid(name: &str, g: &[f64]) -> Result<(), CliError> {
    if g.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    if let Some(v) = g.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(CliError::Config(format!(
            "{name} entries must be finite and non-negative, got {v}"
        )));
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

pub fn diffusion(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let sol = ctx.diffusion()?;
    let xs = ctx.x_grid()?;
    let ys = ctx.y_grid(&[sol.kink])?;
    let mut table = Table::new("retention", DIFFUSION_RETENTION);
    for &y in &ys {
        table.push(vec![y, sol.retention.eval(y)]);
    }
    let psi: Vec<Value> = xs
        .iter()
        .map(|&x| json!({"x": x, "psi_D": sol.psi(x)}))
        .collect();
    let mut j = json!({
        "alpha_star": sol.alpha_star,
        "rho_D": sol.rho_d,
        "kink": sol.kink,
        "equation_residual": sol.equation_residual,
        "solver": to_value(&sol.report),
        "psi_D_at": psi,
        "retention": to_value(&sol.retention),
        "retention_table": to_value(&sol.retention.tabulate(&ys)?),
    });
    if p.eta == 0.0 {
        let s = eta0_deductible(p, ctx.dist(), &ctx.spec)?;
        j["stop_loss"] = json!({"alpha_star": s.alpha_star, "deductible": s.deductible});
    }
    if p.theta == 0.0 {
        let s = tet0_alpha(p, ctx.dist())?;
        j["proportional"] = json!({"alpha_star": s.alpha_star, "eta0": s.eta0, "quota": s.quota});
    }
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

pub fn classical(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let diff = ctx.diffusion()?;
    let sol = solve_rho_j_with(p, ctx.dist(), &diff, &ctx.spec)?;
    let ys = ctx.y_grid(&[sol.threshold, diff.kink])?;
    let mut table = Table::new("retention", CLASSICAL_RETENTION);
    for &y in &ys {
        table.push(vec![
            y,
            sol.retention.eval(y),
            asymptote_g(sol.rho_j, p.theta, p.eta, y),
            diff.retention.eval(y),
        ]);
    }
    let mut j = json!({
        "rho_J": sol.rho_j,
        "threshold": sol.threshold,
        "rho_D": sol.rho_d,
        "ordering_margin": sol.rho_d - sol.rho_j,
        "equation_residual": sol.equation_residual,
        "solver": to_value(&sol.report),
        "retention": to_value(&sol.retention),
        "retention_table": to_value(&sol.retention.tabulate(&ys)?),
    });
    if p.eta == 0.0 {
        let s = eta0_classical(p, ctx.dist(), &ctx.spec)?;
        j["stop_loss"] = json!({"rho_J": s.rho_j, "deductible": s.deductible});
    }
    if p.theta == 0.0 {
        j["crossing_point"] = json!(crossing_point(&sol, &diff, ctx.dist())?);
    }
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

pub fn scaling(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let diff = ctx.diffusion()?;
    let n_list = cfg
        .options
        .n_list
        .clone()
        .unwrap_or(DEFAULT_N_LIST.to_vec());
    if let Some(n) = n_list.iter().find(|n| !(n.is_finite() && **n >= 1.0)) {
        return Err(CliError::Config(format!(
            "n_list entries must be at least 1, got {n}"
        )));
    }
    let xs = ctx.x_grid()?;
    let ys = ctx.y_grid(&[diff.kink])?;
    let report = convergence_report(p, ctx.dist(), &diff, &n_list, &ys, ctx.eps()?, &ctx.spec)?;
    let mut table = Table::new("scaling", SCALING);
    let mut bounds = Vec::new();
    for r in &report.records {
        table.push(vec![r.n, r.rho_j_n, r.lower, r.upper, r.retention_dev]);
        for &x in &xs {
            let b = psi_bounds(report.rho_d, r.rho_j_n, report.c, &report.constants, r.n, x);
            bounds.push(json!({
                "n": r.n,
                "x": x,
                "lower": b.lower,
                "upper": b.upper,
                "lundberg_upper": b.lundberg_upper,
                "pre_asymptotic": b.pre_asymptotic,
            }));
        }
    }
    let (ns, gaps): (Vec<f64>, Vec<f64>) = report
        .records
        .iter()
        .map(|r| (r.n, r.upper - r.rho_j_n))
        .filter(|(_, g)| *g > 0.0)
        .unzip();
    let slope = (ns.len() >= 2).then(|| log_log_slope(&ns, &gaps));
    let j = json!({
        "C": report.c,
        "delta": report.constants.delta,
        "N": report.constants.n_min,
        "m": report.constants.m,
        "eps": report.constants.eps,
        "rho_D": report.rho_d,
        "rate_slope": slope,
        "records": to_value(&report.records),
        "psi_bounds": bounds,
    });
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let o = &cfg.options.simulation;
    let model = o.model.unwrap_or_default();
    let n = ctx.n()?;
    if model == SimModel::Diffusion && n != 1.0 {
        return Err(CliError::Config(
            "the diffusion model does not scale; drop n or use the classical model".into(),
        ));
    }
    let diff = ctx.diffusion()?;
    let retention = match (&o.retention, model) {
        (Some(r), _) => r.clone(),
        (None, SimModel::Diffusion) => diff.retention.clone(),
        (None, SimModel::Classical) => rho_j_scaled(p, ctx.dist(), &diff, n, &ctx.spec)?.retention,
    };
    let x0 = o.x0.unwrap_or(1.0);
    let sim = SimConfig {
        model,
        retention: retention.clone(),
        x0,
        paths: o.paths.unwrap_or(DEFAULT_PATHS),
        seed: o.seed.unwrap_or(0),
        horizon: o.horizon,
        barrier: o.barrier,
        max_step: o.max_step,
        threads: o.threads,
        batch_size: o.batch_size,
    };
    let res = match model {
        SimModel::Classical => simulate_scaled(&sim, p, ctx.dist(), n, &ctx.spec)?,
        SimModel::Diffusion => simulate_diffusion(&sim, p, ctx.dist(), &ctx.spec)?,
    };
    let mut table = Table::new("running", SIMULATE_RUNNING);
    for b in &res.running {
        table.push(vec![
            b.paths as f64,
            b.ruined as f64,
            b.estimate,
            b.std_error,
        ]);
    }
    let mut result = to_value(&res);
    if let Value::Object(m) = &mut result {
        m.remove("running");
    }
    let j = json!({
        "model": to_value(&model),
        "n": n,
        "x0": x0,
        "retention": to_value(&retention),
        "result": result,
        "reference": {
            "rho_D": diff.rho_d,
            "psi_D": diff.psi(x0),
            "lundberg_bound": (-res.rho_hat * x0).exp(),
        },
    });
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

pub fn bounds(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let n = ctx.n()?;
    let diff = ctx.diffusion()?;
    let jn = rho_j_scaled(p, ctx.dist(), &diff, n, &ctx.spec)?;
    let scaled = scale_params(p, ctx.dist(), n)?;
    let c = constant_c(&diff, p, ctx.dist(), &ctx.spec)?;
    let consts = delta_and_n(&diff, ctx.dist(), ctx.eps()?, &ctx.spec)?;
    let mut table = Table::new("bounds", BOUNDS);
    let mut gamma = f64::NAN;
    let mut pre = false;
    for x in ctx.x_grid()? {
        let b = psi_bounds(diff.rho_d, jn.rho_j, c, &consts, n, x);
        let a = appendix_bounds(&scaled.params, jn.rho_j, x);
        gamma = a.gamma;
        pre = b.pre_asymptotic;
        table.push(vec![
            x,
            diff.psi(x),
            b.lower,
            b.upper,
            b.lundberg_upper,
            a.supersolution,
            a.subsolution,
        ]);
    }
    let j = json!({
        "n": n,
        "rho_D": diff.rho_d,
        "rho_J_n": jn.rho_j,
        "C": c,
        "delta": consts.delta,
        "N": consts.n_min,
        "m": consts.m,
        "eps": consts.eps,
        "gamma": gamma,
        "pre_asymptotic": pre,
    });
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

pub fn retention_table(cfg: &RunConfig) -> Result<Output, CliError> {
    let ctx = Ctx::new(cfg)?;
    let p = &cfg.params;
    let n = ctx.n()?;
    let k = n.sqrt();
    let diff = ctx.diffusion()?;
    let jn = rho_j_scaled(p, ctx.dist(), &diff, n, &ctx.spec)?;
    let theta_n = p.theta / k;
    let ys = ctx.y_grid(&[diff.kink, k * jn.threshold])?;
    let mut table = Table::new("retention_table", RETENTION_TABLE);
    let mut worst = 0.0f64;
    for &y in &ys {
        let rd = diff.retention.eval(y);
        let hr = k * jn.retention.eval(y / k);
        let g = k * asymptote_g(jn.rho_j, theta_n, p.eta, y / k);
        worst = worst.max((hr - rd).abs());
        table.push(vec![y, rd, hr, g, hr - rd]);
    }
    let j = json!({
        "n": n,
        "rho_D": diff.rho_d,
        "rho_J_n": jn.rho_j,
        "max_deviation": worst,
        "retention": to_value(&jn.retention),
        "diffusion_retention": to_value(&diff.retention),
    });
    Ok(Output {
        json: j,
        tables: vec![table],
    })
}

/// Every CSV table the binary can emit: (subcommand, table, columns).
#[cfg(test)]
pub fn schemas() -> Vec<(&'static str, &'static str, &'static [&'static str])> {
    vec![
        ("diffusion", "retention", DIFFUSION_RETENTION),
        ("classical", "retention", CLASSICAL_RETENTION),
        ("scaling", "scaling", SCALING),
        ("simulate", "running", SIMULATE_RUNNING),
        ("bounds", "bounds", BOUNDS),
        ("retention-table", "retention_table", RETENTION_TABLE),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_match_frozen_schema() {
        let schema: Value =
            serde_json::from_str(include_str!("../schema/csv_columns.json")).unwrap();
        let tables = schema["tables"].as_array().unwrap();
        let ours = schemas();
        assert_eq!(tables.len(), ours.len());
        for (cmd, table, cols) in ours {
            let entry = tables
                .iter()
                .find(|t| t["command"] == cmd && t["table"] == table)
                .unwrap_or_else(|| panic!("{cmd}/{table} missing from schema"));
            let names: Vec<&str> = entry["columns"]
                .as_array()
                .unwrap()
                .iter()
                .map(|c| c["name"].as_str().unwrap())
                .collect();
            assert_eq!(names, cols, "{cmd}/{table}");
        }
    }
}
