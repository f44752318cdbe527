//! Run configuration and its resolution into concrete chains.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use robit_core::linalg::build_gprior;
use robit_core::{ChainConfig, ChainKind, Dataset, ModelKind, Prior};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::ingest::read_numeric_rows;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Robit,
    Probit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PriorSpec {
    Identity,
    Gprior { g: f64 },
    File { mean: Option<PathBuf>, precision: PathBuf },
}

impl PriorSpec {
    pub fn label(&self) -> String {
        match self {
            PriorSpec::Identity => "identity".into(),
            PriorSpec::Gprior { g } => format!("g{g}"),
            PriorSpec::File { .. } => "file".into(),
        }
    }

    pub fn build(&self, dataset: &Dataset) -> CliResult<Prior> {
        let p = dataset.p();
        match self {
            PriorSpec::Identity => Ok(Prior::identity(p)),
            PriorSpec::Gprior { g } => {
                if !(*g > 0.0) || !g.is_finite() {
                    return Err(CliError::config("g", format!("must be positive, got {g}")));
                }
                Ok(build_gprior(dataset.x(), *g)?)
            }
            PriorSpec::File { mean, precision } => {
                let rows = read_numeric_rows(precision)?;
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(CliError::config("prior-precision", format!("expected a {p}x{p} matrix")));
                }
                let sigma = DMatrix::from_fn(p, p, |i, j| rows[i][j]);
                let beta = match mean {
                    None => DVector::zeros(p),
                    Some(path) => {
                        let values: Vec<f64> = read_numeric_rows(path)?.into_iter().flatten().collect();
                        if values.len() != p {
                            return Err(CliError::config("prior-mean", format!("expected {p} values, got {}", values.len())));
                        }
                        DVector::from_vec(values)
                    }
                };
                Ok(Prior::new(beta, sigma)?)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    /// Diagnostics on selected coefficients.
    Coords,
    /// Diagnostics on the log-likelihood and log-posterior traces.
    Likpd,
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: PathBuf,
    pub response: String,
    pub intercept: bool,
    pub columns: Option<usize>,
    pub models: Vec<ModelName>,
    /// Degrees of freedom; one robit model per entry.
    pub nus: Vec<f64>,
    pub chains: Vec<ChainKind>,
    pub prior: PriorSpec,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub max_lag: usize,
    pub trace: TraceMode,
    /// 1-based coefficient indices for `TraceMode::Coords`; empty means the
    /// first three.
    pub coords: Vec<usize>,
    pub allow_low_nu: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        // A manifest embeds its config; accept either.
        let value = match value.get("config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        Ok(serde_json::from_value(value)?)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.models.is_empty() {
            return Err(CliError::config("model", "at least one model is required"));
        }
        if self.chains.is_empty() {
            return Err(CliError::config("chain", "at least one chain kind is required"));
        }
        if self.models.contains(&ModelName::Robit) && self.nus.is_empty() {
            return Err(CliError::config("nu", "robit models need at least one nu"));
        }
        for &nu in &self.nus {
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(CliError::config("nu", format!("must be positive, got {nu}")));
            }
            if nu <= 2.0 && !self.allow_low_nu && self.models.contains(&ModelName::Robit) {
                return Err(CliError::config("nu", format!("{nu} <= 2 needs --allow-low-nu")));
            }
        }
        if self.iterations == 0 {
            return Err(CliError::config("iters", "must be at least 1"));
        }
        if self.thin == 0 {
            return Err(CliError::config("thin", "must be at least 1"));
        }
        if self.iterations / self.thin < 2 {
            return Err(CliError::config("thin", "fewer than two retained draws"));
        }
        if self.coords.contains(&0) {
            return Err(CliError::config("coords", "indices are 1-based"));
        }
        Ok(())
    }

    /// Models in the order given, robit expanded over `nus`.
    pub fn model_kinds(&self) -> Vec<ModelKind> {
        let mut out = Vec::new();
        for m in &self.models {
            match m {
                ModelName::Probit => out.push(ModelKind::Probit),
                ModelName::Robit => out.extend(self.nus.iter().map(|&nu| ModelKind::Robit { nu })),
            }
        }
        out
    }

    /// One chain per (model, chain kind), all sharing `seed` and drawing
    /// from distinct streams.
    pub fn chain_configs(&self, p: usize) -> Vec<ChainConfig> {
        let mut out = Vec::new();
        for model in self.model_kinds() {
            for &chain in &self.chains {
                let stream = out.len() as u64;
                out.push(ChainConfig {
                    model,
                    chain,
                    iterations: self.iterations,
                    burn_in: self.burn_in,
                    thin: self.thin,
                    seed: self.seed,
                    stream,
                    init_beta: vec![0.0; p],
                    allow_low_nu: self.allow_low_nu,
                });
            }
        }
        out
    }

    /// 0-based coefficient indices to summarise.
    pub fn coordinate_indices(&self, p: usize) -> CliResult<Vec<usize>> {
        if self.coords.is_empty() {
            return Ok((0..p.min(3)).collect());
        }
        self.coords
            .iter()
            .map(|&c| {
                if c > p {
                    Err(CliError::config("coords", format!("index {c} exceeds p = {p}")))
                } else {
                    Ok(c - 1)
                }
            })
            .collect()
    }
}

/// `model-nu-chainkind-prior`, e.g. `robit-3-sandwich-g1000`.
pub fn chain_label(config: &ChainConfig, prior: &PriorSpec) -> String {
    format!("{}-{}-{}", config.model.label(), config.chain.label(), prior.label())
}
