//! The four Markov-chain kernels (robit/probit, DA/sandwich) and the chain
//! driver.
//!
//! All kernels work in the original `beta` parametrization: one iteration
//! draws the latent pairs `(z_i, lambda_i)` given `beta`, optionally rescales
//! `z` by a gamma-driven factor `h` (sandwich), then draws `beta` from its
//! Gaussian full conditional.

use std::time::Instant;

use log::warn;
use nalgebra::{Cholesky, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{log_likelihood, log_prior_density};
use crate::error::{Error, Result};
use crate::linalg::{posterior_precision, Dataset, Prior};
use crate::special::{
    sample_gamma, sample_mvn_cholesky, sample_truncated, Link, RngStream, TDist, TruncationSide,
};

/// Gamma rates below this are treated as degenerate in the sandwich move.
pub const DEGENERATE_RATE: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelKind {
    Robit { nu: f64 },
    Probit,
}

impl ModelKind {
    /// Robit model with `nu > 2` degrees of freedom.
    pub fn robit(nu: f64) -> Result<Self> {
        if !(nu > 2.0) || !nu.is_finite() {
            return Err(Error::Config(format!(
                "robit degrees of freedom must exceed 2, got {nu} (use robit_low_nu to override)"
            )));
        }
        Ok(ModelKind::Robit { nu })
    }

    /// Robit model allowing `0 < nu <= 2`, where the trace-class guarantee
    /// does not apply.
    pub fn robit_low_nu(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Config(format!("degrees of freedom must be positive, got {nu}")));
        }
        if nu <= 2.0 {
            warn!("robit model with nu = {nu} <= 2: geometric ergodicity is not established here");
        }
        Ok(ModelKind::Robit { nu })
    }

    pub fn link(&self) -> Link {
        match *self {
            ModelKind::Robit { nu } => Link::Student(TDist::new(nu).expect("validated nu")),
            ModelKind::Probit => Link::Normal,
        }
    }

    /// `"robit-3"` or `"probit"`.
    pub fn label(&self) -> String {
        match self {
            ModelKind::Robit { nu } => format!("robit-{nu}"),
            ModelKind::Probit => "probit".to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Da,
    Sandwich,
}

impl ChainKind {
    pub fn label(&self) -> &'static str {
        match self {
            ChainKind::Da => "da",
            ChainKind::Sandwich => "sandwich",
        }
    }
}

/// How the sandwich move obtains its scale factor `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rescale {
    /// `h^2 ~ Gamma(n/2, z^T L^{1/2} (I - Q) L^{1/2} z / 2)`, `h > 0`.
    Draw,
    /// Use this `h` without consuming randomness.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub last_z: DVector<f64>,
    pub last_lambda: DVector<f64>,
    pub step_index: u64,
    /// Sandwich steps that fell back to `h = 1` because the gamma rate
    /// underflowed.
    pub degenerate_rescales: u64,
}

impl ChainState {
    pub fn new(beta: DVector<f64>, n: usize) -> Self {
        Self {
            beta,
            last_z: DVector::zeros(n),
            last_lambda: DVector::from_element(n, 1.0),
            step_index: 0,
            degenerate_rescales: 0,
        }
    }
}

fn check_dims(state: &ChainState, dataset: &Dataset, prior: &Prior) -> Result<()> {
    if state.beta.len() != dataset.p() || prior.p() != dataset.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, design has {} columns, prior has dimension {}",
            state.beta.len(),
            dataset.p(),
            prior.p()
        )));
    }
    Ok(())
}

/// Draw `(z, lambda)` given `beta`: `z_i` from the link distribution located
/// at `x_i^T beta` truncated to the side given by `y_i`, then (robit only)
/// `lambda_i ~ Gamma((nu+1)/2, (nu + (z_i - x_i^T beta)^2)/2)`.
pub fn draw_latents(
    beta: &DVector<f64>,
    dataset: &Dataset,
    model: ModelKind,
    rng: &mut RngStream,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let link = model.link();
    let eta = dataset.x() * beta;
    let n = dataset.n();
    let mut z = DVector::zeros(n);
    let mut lambda = DVector::from_element(n, 1.0);
    for i in 0..n {
        let side = TruncationSide::from_response(dataset.y()[i]);
        z[i] = sample_truncated(&link, eta[i], side, rng)?;
        if let ModelKind::Robit { nu } = model {
            let r = z[i] - eta[i];
            lambda[i] = sample_gamma((nu + 1.0) / 2.0, (nu + r * r) / 2.0, rng)?;
        }
    }
    Ok((z, lambda))
}

struct Conditional {
    chol: Cholesky<f64, Dyn>,
    /// `X^T Lambda z`
    xt_lz: DVector<f64>,
}

fn conditional(dataset: &Dataset, prior: &Prior, z: &DVector<f64>, lambda: &DVector<f64>) -> Result<Conditional> {
    let precision = posterior_precision(dataset.x(), lambda.as_slice(), prior.sigma_a())?;
    let chol = Cholesky::new(precision).ok_or_else(|| {
        Error::NotPositiveDefinite("posterior precision X^T Lambda X + sigma_a".into())
    })?;
    let lz = z.component_mul(lambda);
    let xt_lz = dataset.x().transpose() * lz;
    Ok(Conditional { chol, xt_lz })
}

/// `beta ~ N(P^-1 (X^T L z' + sigma_a beta_a), P^-1)` with `z' = h z`.
fn draw_beta(cond: &Conditional, prior: &Prior, h: f64, rng: &mut RngStream) -> DVector<f64> {
    let rhs = &cond.xt_lz * h + prior.sigma_a() * prior.beta_a();
    sample_mvn_cholesky(&rhs, &cond.chol, rng)
}

/// `z^T L^{1/2} (I - Q) L^{1/2} z` with
/// `Q = L^{1/2} X (X^T L X + sigma_a)^-1 X^T L^{1/2}`.
fn residual_quadratic_form(cond: &Conditional, z: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    let zlz: f64 = z.iter().zip(lambda.iter()).map(|(a, l)| l * a * a).sum();
    let v = cond
        .chol
        .l_dirty()
        .solve_lower_triangular(&cond.xt_lz)
        .expect("Cholesky factor has a positive diagonal");
    zlz - v.norm_squared()
}

/// One DA iteration for either model.
pub fn da_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    model: ModelKind,
    rng: &mut RngStream,
) -> Result<ChainState> {
    check_dims(state, dataset, prior)?;
    let (z, lambda) = draw_latents(&state.beta, dataset, model, rng)?;
    let cond = conditional(dataset, prior, &z, &lambda)?;
    let beta = draw_beta(&cond, prior, 1.0, rng);
    Ok(ChainState {
        beta,
        last_z: z,
        last_lambda: lambda,
        step_index: state.step_index + 1,
        degenerate_rescales: state.degenerate_rescales,
    })
}

/// One sandwich iteration for either model. The probit chain is the
/// `Lambda = I` case.
pub fn sandwich_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    model: ModelKind,
    rescale: Rescale,
    rng: &mut RngStream,
) -> Result<ChainState> {
    check_dims(state, dataset, prior)?;
    let (z, lambda) = draw_latents(&state.beta, dataset, model, rng)?;
    let cond = conditional(dataset, prior, &z, &lambda)?;
    let mut degenerate = state.degenerate_rescales;
    let h = match rescale {
        Rescale::Fixed(h) => h,
        Rescale::Draw => {
            let rate = 0.5 * residual_quadratic_form(&cond, &z, &lambda);
            if rate.is_finite() && rate >= DEGENERATE_RATE {
                sample_gamma(0.5 * dataset.n() as f64, rate, rng)?.sqrt()
            } else {
                degenerate += 1;
                1.0
            }
        }
    };
    let beta = draw_beta(&cond, prior, h, rng);
    Ok(ChainState {
        beta,
        last_z: z * h,
        last_lambda: lambda,
        step_index: state.step_index + 1,
        degenerate_rescales: degenerate,
    })
}

pub fn robit_da_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    nu: TDist,
    rng: &mut RngStream,
) -> Result<ChainState> {
    da_step(state, dataset, prior, ModelKind::Robit { nu: nu.nu() }, rng)
}

pub fn robit_sandwich_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    nu: TDist,
    rng: &mut RngStream,
) -> Result<ChainState> {
    sandwich_step(state, dataset, prior, ModelKind::Robit { nu: nu.nu() }, Rescale::Draw, rng)
}

pub fn probit_da_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    rng: &mut RngStream,
) -> Result<ChainState> {
    da_step(state, dataset, prior, ModelKind::Probit, rng)
}

pub fn probit_sandwich_step(
    state: &ChainState,
    dataset: &Dataset,
    prior: &Prior,
    rng: &mut RngStream,
) -> Result<ChainState> {
    sandwich_step(state, dataset, prior, ModelKind::Probit, Rescale::Draw, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub model: ModelKind,
    pub chain: ChainKind,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    pub init_beta: Vec<f64>,
    /// Permit robit chains with `nu <= 2`.
    #[serde(default)]
    pub allow_low_nu: bool,
}

impl ChainConfig {
    /// Defaults: burn-in of twice the retained iterations, no thinning,
    /// zero initial vector.
    pub fn new(model: ModelKind, chain: ChainKind, iterations: usize, seed: u64, p: usize) -> Self {
        Self {
            model,
            chain,
            iterations,
            burn_in: 2 * iterations,
            thin: 1,
            seed,
            stream: 0,
            init_beta: vec![0.0; p],
            allow_low_nu: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be at least 1".into()));
        }
        if let ModelKind::Robit { nu } = self.model {
            if !(nu > 0.0) || !nu.is_finite() {
                return Err(Error::Config(format!("nu must be positive, got {nu}")));
            }
            if nu <= 2.0 && !self.allow_low_nu {
                return Err(Error::Config(format!(
                    "nu = {nu} <= 2 requires allow_low_nu"
                )));
            }
        }
        if self.init_beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("init_beta must be finite".into()));
        }
        Ok(())
    }

    pub fn retained_draws(&self) -> usize {
        self.iterations / self.thin
    }
}

/// Post-burn-in, thinned draws with their scalar traces.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    pub config: ChainConfig,
    /// Iteration (1-based, counted after burn-in) of each stored draw.
    pub iterations: Vec<usize>,
    pub draws: Vec<DVector<f64>>,
    pub lik_trace: Vec<f64>,
    pub lpd_trace: Vec<f64>,
    pub degenerate_rescales: u64,
    pub wall_time_secs: f64,
}

impl SampleMatrix {
    pub fn p(&self) -> usize {
        self.config.init_beta.len()
    }

    /// Trace of coordinate `j` (0-based).
    pub fn coordinate(&self, j: usize) -> Vec<f64> {
        self.draws.iter().map(|b| b[j]).collect()
    }

    pub fn label(&self, prior_label: &str) -> String {
        format!("{}-{}-{}", self.config.model.label(), self.config.chain.label(), prior_label)
    }
}

/// Runs `burn_in` discarded iterations followed by `iterations` recorded
/// ones, keeping every `thin`-th draw.
pub fn run_chain(config: &ChainConfig, dataset: &Dataset, prior: &Prior) -> Result<SampleMatrix> {
    config.validate()?;
    if config.init_beta.len() != dataset.p() || prior.p() != dataset.p() {
        return Err(Error::DimensionMismatch(format!(
            "init_beta has length {}, design has {} columns, prior has dimension {}",
            config.init_beta.len(),
            dataset.p(),
            prior.p()
        )));
    }
    if config.chain == ChainKind::Sandwich && !prior.has_zero_mean() {
        warn!("sandwich rescaling of z leaves the posterior invariant only for a zero prior mean");
    }
    let started = Instant::now();
    let mut rng = RngStream::new(config.seed, config.stream);
    let mut state = ChainState::new(DVector::from_column_slice(&config.init_beta), dataset.n());
    let advance = |state: &ChainState, rng: &mut RngStream| -> Result<ChainState> {
        let next = match config.chain {
            ChainKind::Da => da_step(state, dataset, prior, config.model, rng),
            ChainKind::Sandwich => sandwich_step(state, dataset, prior, config.model, Rescale::Draw, rng),
        };
        next.map_err(|e| Error::Step { step: state.step_index + 1, source: Box::new(e) })
    };
    for _ in 0..config.burn_in {
        state = advance(&state, &mut rng)?;
    }
    let keep = config.retained_draws();
    let mut iterations = Vec::with_capacity(keep);
    let mut draws = Vec::with_capacity(keep);
    let mut lik_trace = Vec::with_capacity(keep);
    let mut lpd_trace = Vec::with_capacity(keep);
    for k in 1..=config.iterations {
        state = advance(&state, &mut rng)?;
        if k % config.thin == 0 {
            let lik = log_likelihood(&state.beta, dataset, config.model)?;
            lik_trace.push(lik);
            lpd_trace.push(lik + log_prior_density(&state.beta, prior)?);
            iterations.push(k);
            draws.push(state.beta.clone());
        }
    }
    Ok(SampleMatrix {
        config: config.clone(),
        iterations,
        draws,
        lik_trace,
        lpd_trace,
        degenerate_rescales: state.degenerate_rescales,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
