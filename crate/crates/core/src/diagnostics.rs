//! Output analysis for chain traces: autocorrelation, running means,
//! batch-means standard errors, and the log-likelihood / log-posterior
//! scalar traces.

use nalgebra::{Cholesky, DVector};
use serde::{Deserialize, Serialize};

use crate::chains::ModelKind;
use crate::error::{Error, Result};
use crate::linalg::{Dataset, Prior};

/// Kahan-Babuska (Neumaier) compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for v in iter {
            s.add(v);
        }
        s
    }
}

pub fn mean(series: &[f64]) -> f64 {
    series.iter().copied().collect::<CompensatedSum>().value() / series.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfResult {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
}

/// Sample autocorrelation with the biased (1/N) autocovariance.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<AcfResult> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::InsufficientLength { needed: max_lag + 1, got: n });
    }
    let m = mean(series);
    let centered: Vec<f64> = series.iter().map(|v| v - m).collect();
    let autocov = |k: usize| -> f64 {
        centered[..n - k]
            .iter()
            .zip(&centered[k..])
            .map(|(a, b)| a * b)
            .collect::<CompensatedSum>()
            .value()
    };
    let c0 = autocov(0);
    if !(c0 > 0.0) {
        return Err(Error::ConstantSeries);
    }
    let mut values = Vec::with_capacity(max_lag + 1);
    values.push(1.0);
    for k in 1..=max_lag {
        values.push(autocov(k) / c0);
    }
    Ok(AcfResult { lags: (0..=max_lag).collect(), values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanSeries {
    /// 1-based count of values averaged.
    pub iterations: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn running_mean(series: &[f64]) -> Result<RunningMeanSeries> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    let mut acc = CompensatedSum::default();
    let mut values = Vec::with_capacity(series.len());
    for (k, &v) in series.iter().enumerate() {
        acc.add(v);
        values.push(acc.value() / (k + 1) as f64);
    }
    Ok(RunningMeanSeries { iterations: (1..=series.len()).collect(), values })
}

/// Batch-means Monte Carlo standard error of the series mean.
///
/// Uses `batch_count` contiguous batches of equal size; leftover values at
/// the start of the series are dropped.
pub fn mcse_batch_means(series: &[f64], batch_count: usize) -> Result<f64> {
    if batch_count < 2 || series.len() < 2 * batch_count {
        return Err(Error::InsufficientLength { needed: 2 * batch_count.max(2), got: series.len() });
    }
    let b = series.len() / batch_count;
    let used = &series[series.len() - b * batch_count..];
    let batch_means: Vec<f64> = used.chunks_exact(b).map(mean).collect();
    let grand = mean(&batch_means);
    let ss = batch_means
        .iter()
        .map(|m| (m - grand) * (m - grand))
        .collect::<CompensatedSum>()
        .value();
    let sigma2 = b as f64 * ss / (batch_count - 1) as f64;
    Ok((sigma2 / used.len() as f64).sqrt())
}

/// Batch count used when none is specified: `floor(sqrt(N))`.
pub fn default_batch_count(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(2)
}

/// `sum_i y_i ln F(x_i^T beta) + (1 - y_i) ln(1 - F(x_i^T beta))`.
pub fn log_likelihood(beta: &DVector<f64>, dataset: &Dataset, model: ModelKind) -> Result<f64> {
    if beta.len() != dataset.p() {
        return Err(Error::DimensionMismatch(format!(
            "beta has length {}, design has {} columns",
            beta.len(),
            dataset.p()
        )));
    }
    let link = model.link();
    let eta = dataset.x() * beta;
    Ok(eta
        .iter()
        .zip(dataset.y())
        .map(|(&e, &y)| if y == 1 { link.ln_cdf(e) } else { link.ln_sf(e) })
        .collect::<CompensatedSum>()
        .value())
}

/// Unnormalized log posterior:
/// `lik(beta) - (p/2) ln(2 pi) + (1/2) ln det(sigma_a) - (1/2)(beta - beta_a)^T sigma_a (beta - beta_a)`.
///
/// With the standard normal prior this is `lik(beta) - (p/2) ln(2 pi) - beta^T beta / 2`.
pub fn log_posterior(
    beta: &DVector<f64>,
    dataset: &Dataset,
    prior: &Prior,
    model: ModelKind,
) -> Result<f64> {
    Ok(log_likelihood(beta, dataset, model)? + log_prior_density(beta, prior)?)
}

/// `ln N(beta; beta_a, sigma_a^{-1})`.
pub fn log_prior_density(beta: &DVector<f64>, prior: &Prior) -> Result<f64> {
    let p = prior.p();
    if beta.len() != p {
        return Err(Error::DimensionMismatch(format!("beta has length {}, prior has dimension {p}", beta.len())));
    }
    let chol = Cholesky::new(prior.sigma_a().clone())
        .ok_or_else(|| Error::NotPositiveDefinite("prior precision".into()))?;
    let logdet: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let d = beta - prior.beta_a();
    let quad = d.dot(&(prior.sigma_a() * &d));
    Ok(-0.5 * p as f64 * (2.0 * std::f64::consts::PI).ln() + 0.5 * logdet - 0.5 * quad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{RngStream, TDist};
    use nalgebra::DMatrix;

    #[test]
    fn acf_lag_zero_and_errors() {
        let s = [1.0, 3.0, 2.0, 5.0, 4.0];
        let acf = autocorrelation(&s, 3).unwrap();
        assert_eq!(acf.values[0], 1.0);
        assert_eq!(acf.lags, vec![0, 1, 2, 3]);
        assert!(acf.values.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        assert!(matches!(autocorrelation(&[2.0; 10], 2), Err(Error::ConstantSeries)));
        assert!(autocorrelation(&s, 5).is_err());
    }

    #[test]
    fn acf_hand_computed() {
        // mean 2, centered (-1, 0, 1): c0 = 2, c1 = 0, c2 = -1
        let acf = autocorrelation(&[1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(acf.values, vec![1.0, 0.0, -0.5]);
    }

    #[test]
    fn running_mean_cases() {
        assert_eq!(running_mean(&[1.0, 1.0, 1.0]).unwrap().values, vec![1.0, 1.0, 1.0]);
        assert_eq!(running_mean(&[0.0, 2.0]).unwrap().values, vec![0.0, 1.0]);
        assert!(matches!(running_mean(&[]), Err(Error::EmptySeries)));
    }

    #[test]
    fn mcse_constant_and_short() {
        assert_eq!(mcse_batch_means(&[3.0; 100], 10).unwrap(), 0.0);
        assert!(mcse_batch_means(&[1.0; 10], 6).is_err());
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut s = CompensatedSum::default();
        s.add(1.0);
        for _ in 0..10 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn likelihood_at_zero_is_n_log_half() {
        let mut rng = RngStream::new(4, 0);
        let x = DMatrix::from_fn(7, 2, |_, _| rng.std_normal());
        let data = Dataset::new(x, vec![1, 0, 0, 1, 1, 0, 1]).unwrap();
        let beta = DVector::zeros(2);
        for model in [ModelKind::Probit, ModelKind::robit(3.0).unwrap()] {
            let v = log_likelihood(&beta, &data, model).unwrap();
            assert!((v + 7.0 * std::f64::consts::LN_2).abs() < 1e-14);
            let lp = log_posterior(&beta, &data, &Prior::identity(2), model).unwrap();
            let want = -7.0 * std::f64::consts::LN_2 - (2.0 * std::f64::consts::PI).ln();
            assert!((lp - want).abs() < 1e-13);
        }
    }

    #[test]
    fn likelihood_separation_limit() {
        let x = DMatrix::from_element(3, 1, 1.0);
        let data = Dataset::new(x, vec![1, 1, 1]).unwrap();
        for model in [ModelKind::Probit, ModelKind::robit(3.0).unwrap()] {
            let v = log_likelihood(&DVector::from_element(1, 1e6), &data, model).unwrap();
            assert!(v <= 0.0 && v > -1e-12, "{v}");
        }
    }

    #[test]
    fn likelihood_stays_finite_far_in_the_tail() {
        let x = DMatrix::from_element(1, 1, 1.0);
        let data = Dataset::new(x, vec![1]).unwrap();
        let v = log_likelihood(&DVector::from_element(1, -60.0), &data, ModelKind::Probit).unwrap();
        assert!(v.is_finite() && v < -1800.0);
        let t = TDist::new(3.0).unwrap();
        let v = log_likelihood(&DVector::from_element(1, -1e60), &data, ModelKind::Robit { nu: t.nu() })
            .unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn log_posterior_identity_prior_matches_display() {
        let mut rng = RngStream::new(14, 0);
        let x = DMatrix::from_fn(5, 3, |_, _| rng.std_normal());
        let data = Dataset::new(x, vec![0, 1, 1, 0, 1]).unwrap();
        let beta = DVector::from_vec(vec![0.3, -1.2, 0.8]);
        let model = ModelKind::robit(5.0).unwrap();
        let lik = log_likelihood(&beta, &data, model).unwrap();
        let want = lik - 1.5 * (2.0 * std::f64::consts::PI).ln() - 0.5 * beta.dot(&beta);
        let got = log_posterior(&beta, &data, &Prior::identity(3), model).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
}
