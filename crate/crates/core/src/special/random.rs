//! Random-variate generators used by the chains.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};

use super::dist::{Link, TDist};
use crate::error::{Error, Result};

/// Surviving truncation mass below which inverse-CDF sampling is abandoned
/// for a tail rejection sampler.
pub const TAIL_SWITCH_MASS: f64 = 1e-12;

/// A reproducible random stream: the same `(seed, stream)` pair always
/// yields the same sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        Open01.sample(self)
    }

    pub fn std_normal(&mut self) -> f64 {
        StandardNormal.sample(self)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Which half-line a truncated latent variable is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationSide {
    Positive,
    Negative,
}

impl TruncationSide {
    pub fn from_response(y: u8) -> Self {
        if y == 1 {
            TruncationSide::Positive
        } else {
            TruncationSide::Negative
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            TruncationSide::Positive => 1.0,
            TruncationSide::Negative => -1.0,
        }
    }

    pub fn contains(self, z: f64) -> bool {
        match self {
            TruncationSide::Positive => z > 0.0,
            TruncationSide::Negative => z < 0.0,
        }
    }
}

/// Draw from `loc + E`, `E` following `link`, conditioned on the result
/// lying on `side` of zero.
///
/// Inverse-CDF on the conditional distribution; when the surviving mass is
/// below [`TAIL_SWITCH_MASS`] a tail rejection sampler takes over.
pub fn sample_truncated<R: Rng + ?Sized>(
    link: &Link,
    loc: f64,
    side: TruncationSide,
    rng: &mut R,
) -> Result<f64> {
    if !loc.is_finite() {
        return Err(Error::Underflow(format!("non-finite latent location {loc}")));
    }
    let s = side.sign();
    // With W following the (symmetric) link distribution, the draw is
    // loc - s*W conditioned on W < c.
    let c = s * loc;
    let ln_mass = link.ln_cdf(c);
    if !ln_mass.is_finite() {
        return Err(Error::Underflow(format!(
            "truncation mass underflows at location {loc}"
        )));
    }
    for _ in 0..1000 {
        let w = if ln_mass < TAIL_SWITCH_MASS.ln() {
            -sample_upper_tail(link, -c, rng)
        } else {
            let u: f64 = Open01.sample(rng);
            let ln_q = u.ln() + ln_mass;
            if ln_q <= -std::f64::consts::LN_2 {
                link.quantile_lower(ln_q)
            } else {
                // 1 - u F(c) = F(-c) + F(c) (1 - u), both terms positive.
                let upper = link.ln_cdf(-c).exp() + ln_mass.exp() * (1.0 - u);
                -link.quantile_lower(upper.ln())
            }
        };
        let z = loc - s * w;
        if side.contains(z) {
            return Ok(z);
        }
    }
    Err(Error::Underflow(format!(
        "could not place a truncated draw on the {side:?} side at location {loc}"
    )))
}

/// `E | E > a` for `a > 0`, by exact rejection.
fn sample_upper_tail<R: Rng + ?Sized>(link: &Link, a: f64, rng: &mut R) -> f64 {
    match link {
        Link::Student(t) => {
            // Pareto(nu) proposal on (a, inf); acceptance probability
            // (x^2 / (nu + x^2))^((nu+1)/2).
            let nu = t.nu();
            loop {
                let u: f64 = Open01.sample(rng);
                let x = a * (-u.ln() / nu).exp();
                let v: f64 = Open01.sample(rng);
                let ln_acc = (nu + 1.0) / 2.0 * (-(nu / (x * x)).ln_1p());
                if v.ln() <= ln_acc {
                    return x;
                }
            }
        }
        Link::Normal => {
            // Exponential proposal with the optimal rate.
            let alpha = 0.5 * (a + (a * a + 4.0).sqrt());
            loop {
                let u: f64 = Open01.sample(rng);
                let x = a - u.ln() / alpha;
                let v: f64 = Open01.sample(rng);
                if v.ln() <= -0.5 * (x - alpha) * (x - alpha) {
                    return x;
                }
            }
        }
    }
}

/// A draw from `t_nu(loc, 1)` truncated to one side of zero.
pub fn sample_truncated_t(
    loc: f64,
    dist: TDist,
    side: TruncationSide,
    rng: &mut RngStream,
) -> Result<f64> {
    sample_truncated(&Link::Student(dist), loc, side, rng)
}

/// A draw from `N(loc, 1)` truncated to one side of zero.
pub fn sample_truncated_normal(loc: f64, side: TruncationSide, rng: &mut RngStream) -> Result<f64> {
    sample_truncated(&Link::Normal, loc, side, rng)
}

/// Gamma draw in the rate parametrization (density proportional to
/// `w^(shape-1) exp(-rate w)`).
pub fn sample_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) || !shape.is_finite() || !rate.is_finite() {
        return Err(Error::Domain(format!(
            "gamma parameters must be positive and finite, got shape={shape}, rate={rate}"
        )));
    }
    let dist = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(format!("gamma({shape}, {rate}): {e}")))?;
    loop {
        let v: f64 = dist.sample(rng);
        if v > 0.0 {
            return Ok(v);
        }
    }
}

/// Draw from `N(P^-1 rhs, P^-1)` given the Cholesky factor of `P`.
pub fn sample_mvn_cholesky<R: Rng + ?Sized>(
    rhs: &DVector<f64>,
    chol: &Cholesky<f64, Dyn>,
    rng: &mut R,
) -> DVector<f64> {
    let mean = chol.solve(rhs);
    let noise = DVector::from_fn(rhs.len(), |_, _| StandardNormal.sample(rng));
    // L^T x = e gives Cov(x) = (L L^T)^-1.
    let offset = chol
        .l_dirty()
        .tr_solve_lower_triangular(&noise)
        .expect("Cholesky factor has a positive diagonal");
    mean + offset
}

/// Draw from `N(precision^-1 rhs, precision^-1)` by factor-and-solve.
pub fn sample_mvn_from_precision<R: Rng + ?Sized>(
    rhs: &DVector<f64>,
    precision: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !precision.is_square() || precision.nrows() != rhs.len() {
        return Err(Error::DimensionMismatch(format!(
            "precision is {}x{}, rhs has length {}",
            precision.nrows(),
            precision.ncols(),
            rhs.len()
        )));
    }
    let chol = Cholesky::new(precision.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("precision matrix".into()))?;
    Ok(sample_mvn_cholesky(rhs, &chol, rng))
}
