//! `ruinopt`: optimal reinsurance retentions, adjustment coefficients, ruin
//! bounds and Monte Carlo checks from a JSON experiment file.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ruinopt::simulate::{SimModel, THREADS_ENV};
use ruinopt::RuinError;

use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("{0}")]
    Ruin(#[from] RuinError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Ruin(e) if e.is_input_error() => 1,
            CliError::Ruin(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "ruinopt",
    version,
    about = "Optimal per-loss reinsurance and ruin probabilities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for `<prefix>.json` and `<prefix>_<table>.csv`.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// File-name prefix; defaults to the subcommand name.
    #[arg(long)]
    prefix: Option<String>,
    /// What to print on stdout.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Args)]
struct Grids {
    /// Initial surplus values, comma separated.
    #[arg(long, value_delimiter = ',')]
    x_grid: Option<Vec<f64>>,
    /// Claim sizes for retention tables, comma separated.
    #[arg(long, value_delimiter = ',')]
    y_grid: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal retention and adjustment coefficient of the diffusion approximation.
    Diffusion {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grids: Grids,
    },
    /// Optimal retention and adjustment coefficient of the jump model.
    Classical {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grids: Grids,
    },
    /// Scaled-model coefficients, sandwich bounds and retention convergence.
    Scaling {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grids: Grids,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<f64>>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Monte Carlo ruin probability under a fixed retention.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_model)]
        model: Option<SimModel>,
        #[arg(long)]
        x0: Option<f64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Scale factor of the jump model.
        #[arg(long)]
        n: Option<f64>,
        #[arg(long)]
        batch_size: Option<u64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        barrier: Option<f64>,
        #[arg(long)]
        max_step: Option<f64>,
    },
    /// Ruin-probability bounds at scale n on an x-grid.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grids: Grids,
        #[arg(long)]
        n: Option<f64>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Diffusion and rescaled jump-model retentions side by side.
    RetentionTable {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grids: Grids,
        #[arg(long)]
        n: Option<f64>,
    },
}

fn parse_model(s: &str) -> Result<SimModel, String> {
    match s {
        "classical" => Ok(SimModel::Classical),
        "diffusion" => Ok(SimModel::Diffusion),
        _ => Err(format!("expected `classical` or `diffusion`, got `{s}`")),
    }
}

fn apply_grids(cfg: &mut RunConfig, g: Grids) {
    if g.x_grid.is_some() {
        cfg.options.x_grid = g.x_grid;
    }
    if g.y_grid.is_some() {
        cfg.options.y_grid = g.y_grid;
    }
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common, cfg, pipeline): (&str, Common, RunConfig, fn(&RunConfig) -> _) =
        match cli.command {
            Command::Diffusion { common, grids } => {
                let mut cfg = RunConfig::load(&common.config)?;
                apply_grids(&mut cfg, grids);
                (
                    "diffusion",
                    common,
                    cfg,
                    commands::diffusion as fn(&RunConfig) -> _,
                )
            }
            Command::Classical { common, grids } => {
                let mut cfg = RunConfig::load(&common.config)?;
                apply_grids(&mut cfg, grids);
                ("classical", common, cfg, commands::classical)
            }
            Command::Scaling {
                common,
                grids,
                n_list,
                eps,
            } => {
                let mut cfg = RunConfig::load(&common.config)?;
                apply_grids(&mut cfg, grids);
                set(&mut cfg.options.n_list, n_list);
                set(&mut cfg.options.eps, eps);
                ("scaling", common, cfg, commands::scaling)
            }
            Command::Simulate {
                common,
                model,
                x0,
                paths,
                seed,
                threads,
                n,
                batch_size,
                horizon,
                barrier,
                max_step,
            } => {
                let mut cfg = RunConfig::load(&common.config)?;
                let s = &mut cfg.options.simulation;
                set(&mut s.model, model);
                set(&mut s.x0, x0);
                set(&mut s.paths, paths);
                set(&mut s.seed, seed);
                set(&mut s.threads, threads);
                set(&mut s.batch_size, batch_size);
                set(&mut s.horizon, horizon);
                set(&mut s.barrier, barrier);
                set(&mut s.max_step, max_step);
                set(&mut cfg.options.n, n);
                ("simulate", common, cfg, commands::simulate)
            }
            Command::Bounds {
                common,
                grids,
                n,
                eps,
            } => {
                let mut cfg = RunConfig::load(&common.config)?;
                apply_grids(&mut cfg, grids);
                set(&mut cfg.options.n, n);
                set(&mut cfg.options.eps, eps);
                ("bounds", common, cfg, commands::bounds)
            }
            Command::RetentionTable { common, grids, n } => {
                let mut cfg = RunConfig::load(&common.config)?;
                apply_grids(&mut cfg, grids);
                set(&mut cfg.options.n, n);
                ("retention-table", common, cfg, commands::retention_table)
            }
        };
    let out = pipeline(&cfg)?;
    let format = common.format.or(cfg.output.format).unwrap_or_default();
    let dir = common.out_dir.or(cfg.output.dir.clone());
    let prefix = common
        .prefix
        .or(cfg.output.prefix.clone())
        .unwrap_or_else(|| name.to_string());
    if let Some(dir) = dir {
        output::write_files(&out, &dir, &prefix)?;
    }
    let text = match format {
        Format::Json => out.render_json()? + "\n",
        Format::Csv => out
            .tables
            .iter()
            .map(|t| t.to_csv())
            .collect::<Result<Vec<_>, _>>()?
            .concat(),
    };
    let mut stdout = std::io::stdout().lock();
    match stdout
        .write_all(text.as_bytes())
        .and_then(|_| stdout.flush())
    {
        // a closed pipe (e.g. `| head`) is not an error
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Io(e.to_string())),
        _ => Ok(()),
    }
}

/// Caps the global pool used by the parallel scaling sweep.
fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config(format!(
            "{THREADS_ENV} must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot start worker threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ruinopt: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
