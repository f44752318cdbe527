//! The `run` command: chains, diagnostics and output files.

use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use robit_core::chains::run_chain;
use robit_core::diagnostics::{autocorrelation, default_batch_count, mcse_batch_means, mean, running_mean};
use robit_core::{ChainConfig, SampleMatrix};
use serde::{Deserialize, Serialize};

use crate::config::{chain_label, RunConfig, TraceMode};
use crate::error::{CliError, CliResult};
use crate::ingest::ingest_csv;
use crate::manifest::{DatasetFingerprint, ManifestBody, ManifestChain, ResolvedPrior, RunManifest};
use crate::svg;
use crate::table::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub name: String,
    pub mean: f64,
    pub mcse: Option<f64>,
    /// `None` for a constant series.
    pub acf_lag1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub label: String,
    pub draws: usize,
    pub wall_time_secs: f64,
    pub degenerate_rescales: u64,
    pub coordinates: Vec<SeriesSummary>,
    pub lik: SeriesSummary,
    pub lpd: SeriesSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub manifest_hash: String,
    pub chains: Vec<ChainSummary>,
}

pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: RunSummary,
    pub samples: Vec<(String, SampleMatrix)>,
}

pub fn summarize(name: String, series: &[f64]) -> SeriesSummary {
    SeriesSummary {
        name,
        mean: mean(series),
        mcse: mcse_batch_means(series, default_batch_count(series.len())).ok(),
        acf_lag1: autocorrelation(series, 1).ok().map(|a| a.values[1]),
    }
}

/// Samples every configured chain and writes all outputs under `out`.
pub fn run(config: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    config.validate()?;
    let data = ingest_csv(&config.data, config.intercept, &config.response, config.columns)?;
    let dataset = &data.dataset;
    let prior = config.prior.build(dataset)?;
    let coords = config.coordinate_indices(dataset.p())?;
    let chain_configs = config.chain_configs(dataset.p());
    for c in &chain_configs {
        c.validate()?;
    }
    let labels: Vec<String> = chain_configs.iter().map(|c| chain_label(c, &config.prior)).collect();

    let body = ManifestBody {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        dataset: DatasetFingerprint::new(dataset, &data.columns),
        prior: ResolvedPrior::new(config.prior.label(), &prior),
        chains: chain_configs
            .iter()
            .zip(&labels)
            .map(|(c, l)| ManifestChain { label: l.clone(), config: c.clone() })
            .collect(),
    };
    let manifest = RunManifest::new(body);
    let hash = manifest.hash.clone();
    create_dir(out)?;
    write_json(&out.join("manifest.json"), &manifest)?;
    info!("manifest {hash}: {} chains, n = {}, p = {}", labels.len(), dataset.n(), dataset.p());

    let results: Vec<robit_core::Result<SampleMatrix>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chain_configs
            .iter()
            .map(|c: &ChainConfig| scope.spawn(|| run_chain(c, dataset, &prior)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("chain thread panicked")).collect()
    });
    let mut samples = Vec::with_capacity(results.len());
    for (label, r) in labels.iter().zip(results) {
        let s = r?;
        info!("{label}: {} draws in {:.2}s", s.draws.len(), s.wall_time_secs);
        samples.push((label.clone(), s));
    }

    let first = &samples[0].1;
    let max_lag = config.max_lag.min(first.draws.len() - 1);
    let mut acf = Table::new("lag", (0..=max_lag).collect());
    let mut runmean = Table::new("iteration", first.iterations.clone());
    let mut chains = Vec::with_capacity(samples.len());
    for (label, s) in &samples {
        let dir = out.join(label);
        create_dir(&dir)?;
        let mut table = Table::new("iteration", s.iterations.clone());
        for j in 0..s.p() {
            table.push(format!("beta_{}", j + 1), s.coordinate(j));
        }
        table.push("lik", s.lik_trace.clone());
        table.push("lpd", s.lpd_trace.clone());
        table.write(&dir.join("samples.csv"), &hash)?;
        let mut scalars = Table::new("iteration", s.iterations.clone());
        scalars.push("lik", s.lik_trace.clone());
        scalars.push("lpd", s.lpd_trace.clone());
        scalars.write(&dir.join("trace_scalars.csv"), &hash)?;

        let series: Vec<(String, Vec<f64>)> = match config.trace {
            TraceMode::Coords => coords.iter().map(|&j| (format!("beta_{}", j + 1), s.coordinate(j))).collect(),
            TraceMode::Likpd => vec![("lik".into(), s.lik_trace.clone()), ("lpd".into(), s.lpd_trace.clone())],
        };
        for (name, values) in &series {
            let column = format!("{label}/{name}");
            let a = match autocorrelation(values, max_lag) {
                Ok(a) => a.values,
                Err(robit_core::Error::ConstantSeries) => {
                    let mut v = vec![f64::NAN; max_lag + 1];
                    v[0] = 1.0;
                    v
                }
                Err(e) => return Err(e.into()),
            };
            acf.push(column.clone(), a);
            runmean.push(column, running_mean(values)?.values);
        }

        chains.push(ChainSummary {
            label: label.clone(),
            draws: s.draws.len(),
            wall_time_secs: s.wall_time_secs,
            degenerate_rescales: s.degenerate_rescales,
            coordinates: (0..s.p()).map(|j| summarize(format!("beta_{}", j + 1), &s.coordinate(j))).collect(),
            lik: summarize("lik".into(), &s.lik_trace),
            lpd: summarize("lpd".into(), &s.lpd_trace),
        });
    }
    acf.write(&out.join("acf.csv"), &hash)?;
    runmean.write(&out.join("runmean.csv"), &hash)?;
    let summary = RunSummary { manifest_hash: hash, chains };
    write_json(&out.join("summary.json"), &summary)?;
    render_figures(out)?;
    Ok(RunOutcome { manifest, summary, samples })
}

/// Regenerates `figures/*.svg` from `acf.csv` and `runmean.csv`.
pub fn render_figures(out: &Path) -> CliResult<Vec<PathBuf>> {
    let figures = out.join("figures");
    create_dir(&figures)?;
    let mut written = Vec::new();
    for (csv, svg_name, title) in [("acf.csv", "acf.svg", "Autocorrelation"), ("runmean.csv", "runmean.svg", "Running mean")] {
        let (table, hash) = Table::read(&out.join(csv))?;
        let path = figures.join(svg_name);
        let doc = svg::render(&table, title).replacen("<rect", &format!("<!-- manifest: {hash} -->\n<rect"), 1);
        fs::write(&path, doc).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}
