//! Run configuration: one JSON document per experiment.
//!
//! Model parameters go under "params" or, as a shorthand, at the top level
//! next to "claims".

use std::path::{Path, PathBuf};

use ruinopt::simulate::SimModel;
use ruinopt::{ClaimDistribution, ModelParams, QuadratureSpec, RetentionFunction};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationOptions {
    pub model: Option<SimModel>,
    /// Defaults to the optimal retention of the chosen model.
    pub retention: Option<RetentionFunction>,
    pub x0: Option<f64>,
    pub paths: Option<u64>,
    pub seed: Option<u64>,
    pub horizon: Option<f64>,
    pub barrier: Option<f64>,
    pub max_step: Option<f64>,
    pub threads: Option<usize>,
    pub batch_size: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommandOptions {
    pub x_grid: Option<Vec<f64>>,
    pub y_grid: Option<Vec<f64>>,
    pub n_list: Option<Vec<f64>>,
    pub eps: Option<f64>,
    /// Scale factor for `bounds`, `simulate` and `retention-table`.
    pub n: Option<f64>,
    pub quadrature: Option<QuadratureSpec>,
    pub simulation: SimulationOptions,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: Option<PathBuf>,
    pub prefix: Option<String>,
    pub format: Option<Format>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: Option<ModelParams>,
    lambda: Option<f64>,
    c: Option<f64>,
    theta: Option<f64>,
    eta: Option<f64>,
    beta: Option<f64>,
    claims: ClaimDistribution,
    #[serde(default)]
    command_options: CommandOptions,
    #[serde(default)]
    output: OutputOptions,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub claims: ClaimDistribution,
    pub options: CommandOptions,
    pub output: OutputOptions,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                inner.to_string()
            } else {
                format!("field `{path}`: {inner}")
            }
        })?;
        let flat = [raw.lambda, raw.c, raw.theta, raw.eta, raw.beta];
        let params = match (raw.params, flat) {
            (Some(p), [None, None, None, None, None]) => p,
            (Some(_), _) => {
                return Err(
                    "give model parameters either under `params` or at the top level, not both"
                        .into(),
                )
            }
            (None, [Some(lambda), Some(c), Some(theta), Some(eta), Some(beta)]) => ModelParams {
                lambda,
                c,
                theta,
                eta,
                beta,
            },
            (None, _) => {
                let names = ["lambda", "c", "theta", "eta", "beta"];
                let missing: Vec<&str> = names
                    .iter()
                    .zip(flat)
                    .filter(|(_, v)| v.is_none())
                    .map(|(n, _)| *n)
                    .collect();
                return Err(format!("missing model parameters: {}", missing.join(", ")));
            }
        };
        Ok(Self {
            params,
            claims: raw.claims,
            options: raw.command_options,
            output: raw.output,
        })
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        self.options.quadrature.unwrap_or_default()
    }
}
