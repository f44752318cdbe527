//! Posterior precision assembly, prior construction and whitening, and the
//! closed-form quadratic-form matrices `Omega(Lambda)` and
//! `Sigma(Lambda) = Omega(Lambda)^-1` in both the `n >= p` and `n < p`
//! regimes.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold below which singular values of `Lambda^{1/2} W` are
/// treated as exactly zero.
pub const SINGULAR_VALUE_CLAMP: f64 = 1e-12;

/// A binary-regression problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Vec<u8>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Vec<u8>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "design matrix must be non-empty, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "design has {} rows but response has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::Domain(format!("response {i} is {}, expected 0 or 1", y[i])));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design matrix contains non-finite values".into()));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &[u8] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Normal prior `beta ~ N_p(beta_a, sigma_a^-1)` with cached symmetric
/// square roots of the precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    beta_a: DVector<f64>,
    sigma_a: DMatrix<f64>,
    sigma_a_sqrt: DMatrix<f64>,
    sigma_a_inv_sqrt: DMatrix<f64>,
}

impl Prior {
    pub fn new(beta_a: DVector<f64>, sigma_a: DMatrix<f64>) -> Result<Self> {
        let p = beta_a.len();
        if sigma_a.nrows() != p || sigma_a.ncols() != p {
            return Err(Error::DimensionMismatch(format!(
                "prior mean has length {p}, precision is {}x{}",
                sigma_a.nrows(),
                sigma_a.ncols()
            )));
        }
        if beta_a.iter().chain(sigma_a.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("prior contains non-finite values".into()));
        }
        let sym = symmetrize(&sigma_a);
        if Cholesky::new(sym.clone()).is_none() {
            return Err(Error::NotPositiveDefinite("prior precision".into()));
        }
        let eig = SymmetricEigen::new(sym.clone());
        if eig.eigenvalues.iter().any(|&v| v <= 0.0) {
            return Err(Error::NotPositiveDefinite("prior precision".into()));
        }
        let sigma_a_sqrt = spectral_map(&eig, f64::sqrt);
        let sigma_a_inv_sqrt = spectral_map(&eig, |v| 1.0 / v.sqrt());
        Ok(Self { beta_a, sigma_a: sym, sigma_a_sqrt, sigma_a_inv_sqrt })
    }

    /// `N(0, I_p)`.
    pub fn identity(p: usize) -> Self {
        Self {
            beta_a: DVector::zeros(p),
            sigma_a: DMatrix::identity(p, p),
            sigma_a_sqrt: DMatrix::identity(p, p),
            sigma_a_inv_sqrt: DMatrix::identity(p, p),
        }
    }

    pub fn beta_a(&self) -> &DVector<f64> {
        &self.beta_a
    }

    pub fn sigma_a(&self) -> &DMatrix<f64> {
        &self.sigma_a
    }

    pub fn sigma_a_sqrt(&self) -> &DMatrix<f64> {
        &self.sigma_a_sqrt
    }

    pub fn sigma_a_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.sigma_a_inv_sqrt
    }

    pub fn p(&self) -> usize {
        self.beta_a.len()
    }

    pub fn has_zero_mean(&self) -> bool {
        self.beta_a.iter().all(|&v| v == 0.0)
    }
}

/// Zellner g-prior: `beta_a = 0`, `sigma_a = X^T X / g`.
pub fn build_gprior(x: &DMatrix<f64>, g: f64) -> Result<Prior> {
    if !(g > 0.0) || !g.is_finite() {
        return Err(Error::Domain(format!("g must be positive, got {g}")));
    }
    let (n, p) = x.shape();
    if n < p {
        return Err(Error::Singular(format!(
            "X^T X is rank deficient (n = {n} < p = {p}); the g-prior is unavailable"
        )));
    }
    let xtx = symmetrize(&(x.transpose() * x));
    if Cholesky::new(xtx.clone()).is_none() {
        return Err(Error::Singular("X^T X is not positive definite; the g-prior is unavailable".into()));
    }
    Prior::new(DVector::zeros(p), xtx / g).map_err(|e| match e {
        Error::NotPositiveDefinite(_) => Error::Singular("X^T X / g is not positive definite".into()),
        other => other,
    })
}

/// Diagonal of the latent precision matrix `Lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaDiag(Vec<f64>);

impl LambdaDiag {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("lambda must be non-empty".into()));
        }
        if let Some(v) = values.iter().find(|&&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("lambda entries must be positive, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lambda_max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Prior-whitened design `W = X sigma_a^{-1/2}` and shifted mean
/// `c_tilde = sigma_a^{1/2} beta_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    pub w: DMatrix<f64>,
    pub c_tilde: DVector<f64>,
}

pub fn whiten(dataset: &Dataset, prior: &Prior) -> Result<Whitened> {
    check_p(dataset.p(), prior.p())?;
    Ok(Whitened {
        w: dataset.x() * prior.sigma_a_inv_sqrt(),
        c_tilde: prior.sigma_a_sqrt() * prior.beta_a(),
    })
}

/// `X^T Lambda X + sigma_a`.
pub fn posterior_precision(
    x: &DMatrix<f64>,
    lambda: &[f64],
    sigma_a: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (n, p) = x.shape();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "X has {n} rows, lambda has {} entries",
            lambda.len()
        )));
    }
    check_p(p, sigma_a.nrows())?;
    if !sigma_a.is_square() {
        return Err(Error::DimensionMismatch("prior precision is not square".into()));
    }
    let mut scaled = x.clone();
    for (i, mut row) in scaled.row_iter_mut().enumerate() {
        row *= lambda[i];
    }
    let m = x.transpose() * scaled + sigma_a;
    Ok(symmetrize(&m))
}

/// `Omega(Lambda)` evaluated literally:
/// `(2 W^T L W + I) - 4 W^T L (L + L W (W^T L W + I)^-1 W^T L)^-1 L W`.
pub fn omega_direct(w: &DMatrix<f64>, lambda: &LambdaDiag) -> Result<DMatrix<f64>> {
    let (n, p) = w.shape();
    check_n(n, lambda)?;
    let lw = scale_rows(w, lambda.as_slice());
    let wtlw = w.transpose() * &lw;
    let m = &wtlw + DMatrix::identity(p, p);
    let m_chol = Cholesky::new(m)
        .ok_or_else(|| Error::NotPositiveDefinite("W^T Lambda W + I".into()))?;
    let lw_t = lw.transpose();
    let inner = DMatrix::from_diagonal(&DVector::from_column_slice(lambda.as_slice()))
        + &lw * m_chol.solve(&lw_t);
    let inner_chol = Cholesky::new(inner)
        .ok_or_else(|| Error::NotPositiveDefinite("Lambda + Lambda W M^-1 W^T Lambda".into()))?;
    Ok(wtlw * 2.0 + DMatrix::identity(p, p) - (&lw_t * inner_chol.solve(&lw)) * 4.0)
}

/// Singular values of `A = Lambda^{1/2} W` (descending, clamped) and the
/// matching right singular vectors as rows.
pub struct ScaledSvd {
    pub singular_values: Vec<f64>,
    pub right_vectors: DMatrix<f64>,
}

pub fn scaled_svd(w: &DMatrix<f64>, lambda: &LambdaDiag) -> Result<ScaledSvd> {
    check_n(w.nrows(), lambda)?;
    let sqrt_l: Vec<f64> = lambda.as_slice().iter().map(|v| v.sqrt()).collect();
    let a = scale_rows(w, &sqrt_l);
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let d_max = order.first().map(|&i| svd.singular_values[i]).unwrap_or(0.0);
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| {
            let d = svd.singular_values[i];
            if d < SINGULAR_VALUE_CLAMP * d_max { 0.0 } else { d }
        })
        .collect();
    let right_vectors = DMatrix::from_fn(order.len(), w.ncols(), |r, c| v_t[(order[r], c)]);
    Ok(ScaledSvd { singular_values, right_vectors })
}

/// `Omega(Lambda)` from the SVD of `Lambda^{1/2} W`:
/// `V (2D^2 + I)^-1 V^T` for `n >= p`, or
/// `U (2D^2 + I_n)^-1 U^T + (I_p - U U^T)` for `n < p`.
pub fn omega_closed_form(w: &DMatrix<f64>, lambda: &LambdaDiag) -> Result<DMatrix<f64>> {
    spectral_form(w, lambda, |d| 1.0 / (2.0 * d * d + 1.0))
}

/// `Sigma(Lambda) = Omega(Lambda)^-1`, same structure with `2D^2 + I`.
pub fn sigma_lambda(w: &DMatrix<f64>, lambda: &LambdaDiag) -> Result<DMatrix<f64>> {
    spectral_form(w, lambda, |d| 2.0 * d * d + 1.0)
}

fn spectral_form(
    w: &DMatrix<f64>,
    lambda: &LambdaDiag,
    f: impl Fn(f64) -> f64,
) -> Result<DMatrix<f64>> {
    let (n, p) = w.shape();
    let svd = scaled_svd(w, lambda)?;
    let r = &svd.right_vectors;
    let diag = DVector::from_iterator(svd.singular_values.len(), svd.singular_values.iter().map(|&d| f(d)));
    let mut out = r.transpose() * DMatrix::from_diagonal(&diag) * r;
    if n < p {
        // U0 U0^T = I - U U^T
        out += DMatrix::identity(p, p) - r.transpose() * r;
    }
    Ok(symmetrize(&out))
}

/// Largest eigenvalue of a symmetric matrix.
pub fn eig_max(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn scale_rows(m: &DMatrix<f64>, s: &[f64]) -> DMatrix<f64> {
    let mut out = m.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= s[i];
    }
    out
}

fn spectral_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let v = &eig.eigenvectors;
    symmetrize(&(v * d * v.transpose()))
}

fn check_p(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch(format!("predictor counts differ: {a} vs {b}")));
    }
    Ok(())
}

fn check_n(n: usize, lambda: &LambdaDiag) -> Result<()> {
    if lambda.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "W has {n} rows, lambda has {} entries",
            lambda.len()
        )));
    }
    Ok(())
}
