//! Command-line flags.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use robit_core::verify::{Falsify, TraceInstance, VerificationConfig};
use robit_core::ChainKind;

use crate::config::{ModelName, PriorSpec, RunConfig, TraceMode};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "robit", version, about = "Robit and probit data-augmentation samplers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the configured chains and write draws, diagnostics and figures.
    Run(RunArgs),
    /// Run the bound and identity checks and the trace-integral estimates.
    Verify(VerifyArgs),
    /// Redraw figures/*.svg from the CSV files of an earlier run.
    Plot {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PriorKind {
    Identity,
    Gprior,
    File,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FalsifyArg {
    Mills,
    Step4,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON run config (or a manifest.json from an earlier run); replaces the
    /// data and sampling flags.
    #[arg(long, conflicts_with = "data")]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, overrides_with = "no_intercept", default_value_t = true)]
    pub intercept: bool,
    #[arg(long = "no-intercept")]
    pub no_intercept: bool,
    /// Keep only the first K predictor columns.
    #[arg(long)]
    pub columns: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "robit")]
    pub model: Vec<ModelName>,
    #[arg(long, value_delimiter = ',', default_value = "3")]
    pub nu: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "da,sandwich", value_parser = parse_chain)]
    pub chain: Vec<ChainKind>,
    #[arg(long, value_enum, default_value = "identity")]
    pub prior: PriorKind,
    #[arg(long)]
    pub g: Option<f64>,
    #[arg(long)]
    pub prior_mean: Option<PathBuf>,
    #[arg(long)]
    pub prior_precision: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Defaults to twice --iters.
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub max_lag: usize,
    #[arg(long, value_enum, default_value = "coords")]
    pub trace: TraceMode,
    /// 1-based coefficient indices for --trace coords.
    #[arg(long, value_delimiter = ',')]
    pub coords: Vec<usize>,
    #[arg(long)]
    pub allow_low_nu: bool,
    #[arg(long)]
    pub out: PathBuf,
}

impl RunArgs {
    pub fn to_config(&self) -> CliResult<RunConfig> {
        if let Some(path) = &self.config {
            return RunConfig::load(path);
        }
        let prior = match self.prior {
            PriorKind::Identity => PriorSpec::Identity,
            PriorKind::Gprior => PriorSpec::Gprior {
                g: self.g.ok_or_else(|| CliError::config("g", "--prior gprior needs --g"))?,
            },
            PriorKind::File => PriorSpec::File {
                mean: self.prior_mean.clone(),
                precision: self
                    .prior_precision
                    .clone()
                    .ok_or_else(|| CliError::config("prior-precision", "--prior file needs --prior-precision"))?,
            },
        };
        Ok(RunConfig {
            data: self.data.clone().expect("clap requires --data without --config"),
            response: self.response.clone(),
            intercept: self.intercept && !self.no_intercept,
            columns: self.columns,
            models: self.model.clone(),
            nus: if self.model.contains(&ModelName::Robit) { self.nu.clone() } else { Vec::new() },
            chains: self.chain.clone(),
            prior,
            iterations: self.iters,
            burn_in: self.burnin.unwrap_or(2 * self.iters),
            thin: self.thin,
            seed: self.seed,
            max_lag: self.max_lag,
            trace: self.trace,
            coords: self.coords.clone(),
            allow_low_nu: self.allow_low_nu,
        })
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Random instances per dimension regime for the Omega identities.
    #[arg(long, default_value_t = 100)]
    pub instances: usize,
    #[arg(long, default_value_t = 500)]
    pub grid_points: usize,
    #[arg(long, value_delimiter = ',', default_value = "2.1,2.5,3,5,10,30")]
    pub nus: Vec<f64>,
    #[arg(long, value_enum)]
    pub falsify: Option<FalsifyArg>,
    /// Trace-integral instance as `n=..,p=..,nu=..`.
    #[arg(long, default_value = "n=2,p=1,nu=3")]
    pub trace_instance: String,
    /// Number of independent seeds for the trace estimate.
    #[arg(long, default_value_t = 2)]
    pub seeds: usize,
    #[arg(long, default_value_t = 101)]
    pub outer_nodes: usize,
    #[arg(long, default_value_t = 1000)]
    pub inner_draws: usize,
    #[arg(long, default_value_t = 20_250_101)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

impl VerifyArgs {
    pub fn to_config(&self) -> CliResult<VerificationConfig> {
        let (n, p, nu) = parse_trace_instance(&self.trace_instance)?;
        Ok(VerificationConfig {
            nus: self.nus.clone(),
            grid_points: self.grid_points,
            omega_instances: self.instances,
            trace_instance: Some(TraceInstance::synthetic(n, p, nu, self.seed)?),
            trace_seeds: self.seeds,
            outer_nodes: self.outer_nodes,
            inner_draws: self.inner_draws,
            seed: self.seed,
            falsify: self.falsify.map(|f| match f {
                FalsifyArg::Mills => Falsify::Mills,
                FalsifyArg::Step4 => Falsify::Step4,
            }),
            ..VerificationConfig::default()
        })
    }
}

pub fn parse_trace_instance(s: &str) -> CliResult<(usize, usize, f64)> {
    let bad = |m: String| CliError::config("trace-instance", m);
    let (mut n, mut p, mut nu) = (None, None, None);
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{part}`")))?;
        let v = v.trim();
        match k.trim() {
            "n" => n = Some(v.parse().map_err(|_| bad(format!("bad n `{v}`")))?),
            "p" => p = Some(v.parse().map_err(|_| bad(format!("bad p `{v}`")))?),
            "nu" => nu = Some(v.parse().map_err(|_| bad(format!("bad nu `{v}`")))?),
            other => return Err(bad(format!("unknown key `{other}`"))),
        }
    }
    match (n, p, nu) {
        (Some(n), Some(p), Some(nu)) => Ok((n, p, nu)),
        _ => Err(bad("n, p and nu are all required".into())),
    }
}

fn parse_chain(s: &str) -> Result<ChainKind, String> {
    match s {
        "da" => Ok(ChainKind::Da),
        "sandwich" => Ok(ChainKind::Sandwich),
        other => Err(format!("unknown chain kind `{other}` (expected da or sandwich)")),
    }
}
