//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use robit_cli::config::{ModelName, PriorSpec, RunConfig, TraceMode};
use robit_core::chains::run_chain;
use robit_core::diagnostics::{autocorrelation, default_batch_count, log_likelihood, mcse_batch_means, mean};
use robit_core::linalg::build_gprior;
use robit_core::quadrature::integrate_real_line;
use robit_core::verify::{
    check_mills_bound, log_grid, mills_m_values, run_omega_suite, trace_mc, AgreementCheck, TraceInstance,
};
use robit_core::{ChainConfig, ChainKind, Dataset, ModelKind, Prior, RngStream, TDist};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn within_budget(elapsed: Duration, budget_secs: u64) -> bool {
    elapsed <= Duration::from_secs(budget_secs)
}

const NUS: [f64; 6] = [2.1, 2.5, 3.0, 5.0, 10.0, 30.0];

fn mills_suite() -> Outcome {
    let started = Instant::now();
    let grid = log_grid(1e-3, 1e2, 500);
    let mut points = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for nu in NUS {
        for m in mills_m_values(nu) {
            let r = check_mills_bound(nu, m, &grid).expect("valid parameters");
            points += r.points_checked;
            worst = worst.min(r.worst_relative_margin);
            if !r.passed {
                failures.push(format!("{} at {}", r.name, r.worst_point));
            }
        }
    }
    let elapsed = started.elapsed();
    outcome(
        failures.is_empty() && points == 2 * 500 * 6 * 3 && within_budget(elapsed, 10),
        format!("{points} inequality evaluations, worst relative margin {worst:.3e}, {failures:?}, {elapsed:.2?}"),
    )
}

fn omega_suite() -> Outcome {
    let started = Instant::now();
    let (checks, summary) = run_omega_suite(100, 12, 20_240_202).expect("suite runs");
    let wide = checks.iter().filter(|c| c.n < c.p).count();
    let elapsed = started.elapsed();
    outcome(
        summary.passed && checks.len() == 200 && wide == 100 && within_budget(elapsed, 30),
        format!("{} instances ({wide} with n < p): {}, {elapsed:.2?}", checks.len(), summary.worst_point),
    )
}

/// The n = 3, p = 1 instance used by the stationarity checks.
fn tiny_instance() -> Dataset {
    Dataset::new(DMatrix::from_column_slice(3, 1, &[1.0, -0.5, 1.5]), vec![1, 1, 0]).unwrap()
}

struct Moments {
    mean: f64,
    var: f64,
}

fn quadrature_moments(data: &Dataset, model: ModelKind) -> Moments {
    let post = |b: f64| (log_likelihood(&DVector::from_element(1, b), data, model).unwrap() - 0.5 * b * b).exp();
    let z = integrate_real_line(post, 0.0, 1.0, 1e-15, 1e-12).value;
    let m1 = integrate_real_line(|b| b * post(b), 0.0, 1.0, 1e-15, 1e-12).value / z;
    let m2 = integrate_real_line(|b| b * b * post(b), 0.0, 1.0, 1e-15, 1e-12).value / z;
    Moments { mean: m1, var: m2 - m1 * m1 }
}

struct ChainMoments {
    label: String,
    mean: f64,
    mean_mcse: f64,
    var: f64,
    var_mcse: f64,
}

fn chain_moments(data: &Dataset, model: ModelKind, chain: ChainKind, seed: u64) -> ChainMoments {
    let mut cfg = ChainConfig::new(model, chain, 100_000, seed, 1);
    cfg.burn_in = 200_000;
    let s = run_chain(&cfg, data, &Prior::identity(1)).expect("chain runs");
    let b = s.coordinate(0);
    let m = mean(&b);
    let sq: Vec<f64> = b.iter().map(|v| (v - m) * (v - m)).collect();
    let batches = default_batch_count(b.len());
    ChainMoments {
        label: format!("{}-{}", model.label(), chain.label()),
        mean: m,
        mean_mcse: mcse_batch_means(&b, batches).unwrap(),
        var: mean(&sq),
        var_mcse: mcse_batch_means(&sq, batches).unwrap(),
    }
}

fn stationarity(runs: &[(ModelKind, ChainMoments)], elapsed: Duration) -> Outcome {
    let data = tiny_instance();
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, c) in runs {
        let truth = quadrature_moments(&data, *model);
        let zm = (c.mean - truth.mean) / c.mean_mcse;
        let zv = (c.var - truth.var) / c.var_mcse;
        ok &= zm.abs() <= 3.0 && zv.abs() <= 3.0;
        parts.push(format!("{} mean z={zm:+.2} var z={zv:+.2}", c.label));
    }
    outcome(ok && within_budget(elapsed, 120), format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn agreement(runs: &[(ModelKind, ChainMoments)]) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in runs.chunks(2) {
        let (da, sw) = (&pair[0].1, &pair[1].1);
        let combined = (da.mean_mcse.powi(2) + sw.mean_mcse.powi(2)).sqrt();
        let diff = (da.mean - sw.mean).abs();
        ok &= diff <= 3.0 * combined;
        parts.push(format!("{} vs {}: |diff|={diff:.2e} <= 3*{combined:.2e}", da.label, sw.label));
    }
    outcome(ok, parts.join(", "))
}

/// n = 20, p = 3 (intercept plus two covariates) with responses from the
/// robit-3 model at beta = (0.5, 1, -1).
fn dominance_dataset() -> Dataset {
    let mut rng = RngStream::new(4242, 0);
    let n = 20;
    let mut x = DMatrix::zeros(n, 3);
    let mut y = Vec::with_capacity(n);
    let t3 = TDist::new(3.0).unwrap();
    for i in 0..n {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = rng.std_normal();
        x[(i, 2)] = rng.std_normal();
        let eta = 0.5 + x[(i, 1)] - x[(i, 2)];
        let u = rng.open01();
        let e = t3.quantile(u).unwrap();
        y.push(u8::from(eta + e > 0.0));
    }
    Dataset::new(x, y).unwrap()
}

fn dominance() -> Outcome {
    let started = Instant::now();
    let data = dominance_dataset();
    let prior = build_gprior(data.x(), 1000.0).unwrap();
    let model = ModelKind::Robit { nu: 3.0 };
    let replicates = 20;
    let mut diffs = Vec::with_capacity(replicates);
    let (mut acf_da, mut acf_sw) = (0.0, 0.0);
    for r in 0..replicates {
        let seed = 9_000 + r as u64;
        let lag1 = |chain: ChainKind, stream: u64| {
            let mut cfg = ChainConfig::new(model, chain, 5_000, seed, 3);
            cfg.burn_in = 2_000;
            cfg.stream = stream;
            let s = run_chain(&cfg, &data, &prior).expect("chain runs");
            // mean lag-1 autocorrelation over the coefficients
            (0..3).map(|j| autocorrelation(&s.coordinate(j), 1).unwrap().values[1]).sum::<f64>() / 3.0
        };
        let da = lag1(ChainKind::Da, 0);
        let sw = lag1(ChainKind::Sandwich, 1);
        acf_da += da / replicates as f64;
        acf_sw += sw / replicates as f64;
        diffs.push(da - sw);
    }
    let d_mean = mean(&diffs);
    let sd = (diffs.iter().map(|d| (d - d_mean).powi(2)).sum::<f64>() / (replicates - 1) as f64).sqrt();
    let t = d_mean / (sd / (replicates as f64).sqrt());
    // one-sided 5% critical value of t with 19 degrees of freedom
    let critical = 1.729_132_811_521_367;
    let elapsed = started.elapsed();
    outcome(
        t > critical && acf_sw <= acf_da && within_budget(elapsed, 180),
        format!("mean lag-1 ACF DA={acf_da:.4} sandwich={acf_sw:.4}, paired t={t:.2} (critical {critical:.3}), {elapsed:.2?}"),
    )
}

fn probit_limit(probit_da: &ChainMoments, robit_da: &ChainMoments) -> Outcome {
    let data = tiny_instance();
    let combined = (probit_da.mean_mcse.powi(2) + robit_da.mean_mcse.powi(2)).sqrt();
    let diff = (probit_da.mean - robit_da.mean).abs();
    // |x_i beta| <= 3 for all rows means |beta| <= 3 / max |x_i| = 2.
    let mut worst: f64 = 0.0;
    for k in 0..=400 {
        let b = DVector::from_element(1, -2.0 + 4.0 * k as f64 / 400.0);
        let r = log_likelihood(&b, &data, ModelKind::Robit { nu: 1000.0 }).unwrap();
        let p = log_likelihood(&b, &data, ModelKind::Probit).unwrap();
        worst = worst.max((r - p).abs());
    }
    let bound = 0.01 * data.n() as f64;
    outcome(
        diff <= 3.0 * combined && worst <= bound,
        format!("|mean diff|={diff:.2e} <= 3*{combined:.2e}; max |lik diff|={worst:.2e} <= {bound}"),
    )
}

fn trace_stability() -> Outcome {
    let started = Instant::now();
    let model = ModelKind::Robit { nu: 3.0 };
    let zero = Dataset::new(DMatrix::zeros(1, 1), vec![1]).unwrap();
    let z = trace_mc(&zero, &Prior::identity(1), model, 101, 100, 31).unwrap();
    let zero_ok = (z.estimate - 1.0).abs() <= 3.0 * z.se + 1e-9;

    let instance = TraceInstance::synthetic(2, 1, 3.0, 0).unwrap().dataset().unwrap();
    let prior = Prior::identity(1);
    let a = trace_mc(&instance, &prior, model, 101, 1000, 41).unwrap();
    let b = trace_mc(&instance, &prior, model, 101, 1000, 42).unwrap();
    let doubled = trace_mc(&instance, &prior, model, 202, 1000, 43).unwrap();
    let seeds = AgreementCheck::new("seeds", &a, &b);
    let nodes = AgreementCheck::new("nodes", &a, &doubled);
    let elapsed = started.elapsed();
    outcome(
        zero_ok && seeds.passed && nodes.passed && within_budget(elapsed, 120),
        format!(
            "zero design I={:.12} (se {:.1e}); I={:.4}±{:.4} vs {:.4}±{:.4} (seeds), {:.4}±{:.4} (doubled nodes); {elapsed:.2?}",
            z.estimate, z.se, a.estimate, a.se, b.estimate, b.se, doubled.estimate, doubled.se
        ),
    )
}

fn reproducibility() -> Outcome {
    let dir = std::env::temp_dir().join(format!("robit-acceptance-{}", std::process::id()));
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/lupus_like.csv");
    let cfg = RunConfig {
        data,
        response: "y".into(),
        intercept: true,
        columns: None,
        models: vec![ModelName::Robit, ModelName::Probit],
        nus: vec![3.0],
        chains: vec![ChainKind::Da, ChainKind::Sandwich],
        prior: PriorSpec::Gprior { g: 3.49 },
        iterations: 500,
        burn_in: 1000,
        thin: 1,
        seed: 7,
        max_lag: 50,
        trace: TraceMode::Coords,
        coords: Vec::new(),
        allow_low_nu: false,
    };
    let first = robit_cli::run::run(&cfg, &dir.join("a")).expect("first run");
    robit_cli::run::run(&cfg, &dir.join("b")).expect("second run");
    let mut identical = 0;
    for (label, _) in &first.samples {
        let a = fs::read(dir.join("a").join(label).join("samples.csv")).unwrap();
        let b = fs::read(dir.join("b").join(label).join("samples.csv")).unwrap();
        identical += usize::from(a == b);
    }
    let _ = fs::remove_dir_all(&dir);
    outcome(
        identical == first.samples.len(),
        format!("{identical}/{} samples.csv files byte-identical", first.samples.len()),
    )
}

fn diagnostics_oracles() -> Outcome {
    let mut rng = RngStream::new(777, 0);
    let n = 100_000;
    let phi = 0.9;
    let mut x = rng.std_normal() / (1.0 - phi * phi as f64).sqrt();
    let ar: Vec<f64> = (0..n)
        .map(|_| {
            x = phi * x + rng.std_normal();
            x
        })
        .collect();
    let acf = autocorrelation(&ar, 1).unwrap();
    let iid: Vec<f64> = (0..n).map(|_| rng.std_normal()).collect();
    let mcse = mcse_batch_means(&iid, default_batch_count(n)).unwrap();
    let ratio = mcse * (n as f64).sqrt();
    let lag0_exact = acf.values[0] == 1.0 && autocorrelation(&iid, 0).unwrap().values[0] == 1.0;
    outcome(
        (acf.values[1] - 0.9).abs() <= 0.02 && ratio >= 1.0 / 1.3 && ratio <= 1.3 && lag0_exact,
        format!("AR(1) lag-1 ACF={:.4}; iid MCSE*sqrt(N)={ratio:.4}; ACF(0)==1: {lag0_exact}", acf.values[1]),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("1 tail-ratio bounds", mills_suite()));
    results.push(("2 Omega identities", omega_suite()));

    let started = Instant::now();
    let data = tiny_instance();
    let robit = ModelKind::Robit { nu: 3.0 };
    let runs = vec![
        (robit, chain_moments(&data, robit, ChainKind::Da, 301)),
        (robit, chain_moments(&data, robit, ChainKind::Sandwich, 302)),
        (ModelKind::Probit, chain_moments(&data, ModelKind::Probit, ChainKind::Da, 303)),
        (ModelKind::Probit, chain_moments(&data, ModelKind::Probit, ChainKind::Sandwich, 304)),
    ];
    let elapsed = started.elapsed();
    results.push(("3 stationarity", stationarity(&runs, elapsed)));
    results.push(("4 DA/sandwich agreement", agreement(&runs)));
    results.push(("5 sandwich dominance", dominance()));
    let robit1000 = chain_moments(&data, ModelKind::Robit { nu: 1000.0 }, ChainKind::Da, 305);
    results.push(("6 probit vs robit(1000)", probit_limit(&runs[2].1, &robit1000)));
    results.push(("7 trace integral", trace_stability()));
    results.push(("8 reproducibility", reproducibility()));
    results.push(("9 diagnostics oracles", diagnostics_oracles()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("criterion {name}: {} ({})", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
