use nalgebra::{DMatrix, DVector};
use robit_core::diagnostics::mean;
use robit_core::special::{
    sample_gamma, sample_mvn_from_precision, sample_truncated_normal, sample_truncated_t, RngStream, StdNormal,
    TDist, TruncationSide,
};

/// Kolmogorov-Smirnov statistic of `draws` against `cdf`.
fn ks_statistic(draws: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn half_t_mean() {
    // E|T| for nu = 3 is 2 sqrt(3) / pi.
    let d = TDist::new(3.0).unwrap();
    let mut rng = RngStream::new(101, 0);
    let draws: Vec<f64> = (0..200_000).map(|_| sample_truncated_t(0.0, d, TruncationSide::Positive, &mut rng).unwrap()).collect();
    assert!(draws.iter().all(|&z| z > 0.0));
    let want = 2.0 * 3f64.sqrt() / std::f64::consts::PI;
    // Var|T| = 3 - want^2 ~ 1.78
    let se = ((3.0 - want * want) / draws.len() as f64).sqrt();
    assert!((mean(&draws) - want).abs() < 4.0 * se, "{} vs {want}", mean(&draws));
}

#[test]
fn truncated_t_matches_exact_cdf_and_rejection_sampler() {
    let (nu, loc) = (5.0, -2.0);
    let d = TDist::new(nu).unwrap();
    let mut rng = RngStream::new(102, 0);
    let n = 20_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_truncated_t(loc, d, TruncationSide::Positive, &mut rng).unwrap()).collect();

    let mass = 1.0 - d.cdf(-loc);
    let exact = |z: f64| (d.cdf(z - loc) - d.cdf(-loc)) / mass;
    // 1% critical value of the one-sample KS statistic: 1.628 / sqrt(n)
    assert!(ks_statistic(&mut draws, exact) < 1.628 / (n as f64).sqrt());

    // Naive rejection from t = Z / sqrt(chi2_nu / nu).
    let mut naive = Vec::with_capacity(n);
    let mut rng2 = RngStream::new(103, 0);
    while naive.len() < n {
        let chi2 = 2.0 * sample_gamma(nu / 2.0, 1.0, &mut rng2).unwrap();
        let z = loc + rng2.std_normal() / (chi2 / nu).sqrt();
        if z > 0.0 {
            naive.push(z);
        }
    }
    // 1% critical value for two samples of equal size n: 1.628 sqrt(2/n)
    assert!(ks_two_sample(&mut draws, &mut naive) < 1.628 * (2.0 / n as f64).sqrt());
}

#[test]
fn truncated_normal_negative_side() {
    let mut rng = RngStream::new(104, 0);
    let loc = 0.7;
    let n = 20_000;
    let mut draws: Vec<f64> = (0..n).map(|_| sample_truncated_normal(loc, TruncationSide::Negative, &mut rng).unwrap()).collect();
    assert!(draws.iter().all(|&z| z < 0.0));
    let mass = StdNormal.cdf(-loc);
    let exact = |z: f64| StdNormal.cdf(z - loc) / mass;
    assert!(ks_statistic(&mut draws, exact) < 1.628 / (n as f64).sqrt());
}

#[test]
fn gamma_moments() {
    let mut rng = RngStream::new(105, 0);
    let (shape, rate) = (2.0, 1.5);
    let n = 200_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_gamma(shape, rate, &mut rng).unwrap()).collect();
    let m = mean(&draws);
    let v = draws.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    let sd_mean = (shape / (rate * rate) / n as f64).sqrt();
    assert!((m - shape / rate).abs() < 4.0 * sd_mean);
    assert!((v / (shape / (rate * rate)) - 1.0).abs() < 0.03);
}

#[test]
fn mvn_covariance_is_inverse_precision() {
    let precision = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
    let cov = precision.clone().try_inverse().unwrap();
    let rhs = DVector::from_vec(vec![1.0, -0.5]);
    let want_mean = &cov * &rhs;
    let mut rng = RngStream::new(106, 0);
    let n = 100_000;
    let draws: Vec<DVector<f64>> = (0..n).map(|_| sample_mvn_from_precision(&rhs, &precision, &mut rng).unwrap()).collect();
    let m = draws.iter().fold(DVector::zeros(2), |a, d| a + d) / n as f64;
    let mut c = DMatrix::zeros(2, 2);
    for d in &draws {
        let e = d - &m;
        c += &e * e.transpose();
    }
    c /= (n - 1) as f64;
    assert!((m - want_mean).amax() < 0.01);
    assert!((c - cov).amax() < 0.01);
}

#[test]
fn same_stream_same_draws() {
    let d = TDist::new(3.0).unwrap();
    let run = |seed, stream| {
        let mut rng = RngStream::new(seed, stream);
        (0..50).map(|_| sample_truncated_t(0.3, d, TruncationSide::Negative, &mut rng).unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(run(7, 2), run(7, 2));
    assert_ne!(run(7, 2), run(7, 3));
}
