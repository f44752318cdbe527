//! Student-t and standard normal distribution functions.
//!
//! Everything is evaluated through log-CDFs so that tail masses far below
//! `f64::MIN_POSITIVE` remain usable by the likelihood and the truncated
//! samplers.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::ln_gamma;

use super::beta::{ln_incomplete_beta_pair, ln_one_minus_exp};
use crate::error::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Student-t distribution with location 0 and scale 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TDist {
    nu: f64,
}

impl TDist {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0) || !nu.is_finite() {
            return Err(Error::Domain(format!("degrees of freedom must be positive, got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, t: f64) -> f64 {
        let nu = self.nu;
        ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * PI).ln()
            - (nu + 1.0) / 2.0 * (t * t / nu).ln_1p()
    }

    pub fn pdf(&self, t: f64) -> f64 {
        self.ln_pdf(t).exp()
    }

    /// `ln F_nu(t)`.
    ///
    /// Uses `F(t) = 1 - I_x(nu/2, 1/2) / 2` for `t > 0` with
    /// `x = nu / (t^2 + nu)`, and the mirror image for `t < 0`.
    pub fn ln_cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        if t == 0.0 {
            return -LN_2;
        }
        let nu = self.nu;
        let at = t.abs();
        // ln(t^2 + nu) without overflowing t^2.
        let ln_denom = if at > 1e100 {
            2.0 * at.ln() + (nu / (at * at)).ln_1p()
        } else {
            (at * at + nu).ln()
        };
        let ln_x = nu.ln() - ln_denom;
        let x = ln_x.exp();
        let ratio = nu / (at * at);
        let y = if at > 1e100 { 1.0 } else { 1.0 / (1.0 + ratio) };
        let ln_y = if at > 1e100 { 0.0 } else { -ratio.ln_1p() };
        let (ln_i, _) = ln_incomplete_beta_pair(nu / 2.0, 0.5, x, y, ln_x, ln_y);
        let ln_half_i = ln_i - LN_2;
        if t < 0.0 {
            ln_half_i
        } else {
            ln_one_minus_exp(ln_half_i)
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            self.ln_cdf(t).exp()
        } else {
            1.0 - self.ln_cdf(-t).exp()
        }
    }

    /// Inverse CDF.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        quantile_from_lower(&Link::Student(*self), p)
    }
}

/// Standard normal distribution functions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StdNormal;

impl StdNormal {
    pub fn ln_pdf(&self, x: f64) -> f64 {
        -0.5 * x * x - LN_SQRT_2PI
    }

    /// `ln Phi(x)`, accurate deep into the lower tail.
    pub fn ln_cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x < -37.0 {
            // Asymptotic Mills-ratio series; relative error below 1e-13 here.
            let z2 = 1.0 / (x * x);
            let series = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
            self.ln_pdf(x) - (-x).ln() + series.ln()
        } else if x < 5.0 {
            (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
        } else {
            (-0.5 * erfc(x / std::f64::consts::SQRT_2)).ln_1p()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        quantile_from_lower(&Link::Normal, p)
    }
}

/// A symmetric latent-error distribution: the inverse link of a binary
/// regression model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Link {
    Student(TDist),
    Normal,
}

impl Link {
    pub fn ln_cdf(&self, x: f64) -> f64 {
        match self {
            Link::Student(t) => t.ln_cdf(x),
            Link::Normal => StdNormal.ln_cdf(x),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        match self {
            Link::Student(t) => t.ln_pdf(x),
            Link::Normal => StdNormal.ln_pdf(x),
        }
    }

    /// `ln(1 - F(x))`, by symmetry `ln F(-x)`.
    pub fn ln_sf(&self, x: f64) -> f64 {
        self.ln_cdf(-x)
    }

    fn lower_guess(&self, ln_p: f64) -> f64 {
        let z = if ln_p > -700.0 {
            -std::f64::consts::SQRT_2 * erfc_inv(2.0 * ln_p.exp())
        } else {
            let l = -2.0 * ln_p;
            -(l - (2.0 * PI * l).ln()).sqrt()
        };
        match self {
            Link::Normal => z,
            Link::Student(t) => {
                let nu = t.nu();
                // Cornish-Fisher expansion around the normal quantile ...
                let z2 = z * z;
                let cf = z + z * (z2 + 1.0) / (4.0 * nu)
                    + z * (5.0 * z2 * z2 + 16.0 * z2 + 3.0) / (96.0 * nu * nu);
                // ... and the power-law tail F(w) ~ C |w|^-nu, which
                // overshoots. Take the less extreme of the two.
                let ln_c = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln()
                    + (nu + 1.0) / 2.0 * nu.ln()
                    - nu.ln();
                let tail = -((ln_c - ln_p) / nu).exp();
                let w = cf.max(tail);
                if w < 0.0 { w } else { -1.0 }
            }
        }
    }

    /// The `w <= 0` solving `ln F(w) = ln_p`, for `ln_p <= ln(1/2)`.
    ///
    /// Safeguarded Newton on `ln F`; steps leaving the current bracket fall
    /// back to bisection, geometric when the bracket spans magnitudes.
    pub fn quantile_lower(&self, ln_p: f64) -> f64 {
        if ln_p >= -LN_2 {
            return 0.0;
        }
        if ln_p == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = 0.0_f64;
        let mut w = self.lower_guess(ln_p);
        for _ in 0..300 {
            let ln_f = self.ln_cdf(w);
            let gw = ln_f - ln_p;
            if gw == 0.0 {
                return w;
            }
            if gw > 0.0 {
                hi = w;
            } else {
                lo = w;
            }
            // d/dw ln F(w) = f(w) / F(w)
            let slope = (self.ln_pdf(w) - ln_f).exp();
            let mut next = w - gw / slope;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = if lo == f64::NEG_INFINITY {
                    2.0 * w.min(-1.0)
                } else if hi < -1.0 && lo < 4.0 * hi {
                    -((-lo).ln() * 0.5 + (-hi).ln() * 0.5).exp()
                } else {
                    0.5 * (lo + hi)
                };
            }
            if !next.is_finite() {
                return f64::MIN;
            }
            if (next - w).abs() <= 4.0 * f64::EPSILON * w.abs().max(1e-300) {
                return next;
            }
            w = next;
        }
        w
    }
}

fn quantile_from_lower(link: &Link, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("quantile probability {p} outside (0, 1)")));
    }
    if p == 0.5 {
        Ok(0.0)
    } else if p < 0.5 {
        Ok(link.quantile_lower(p.ln()))
    } else {
        Ok(-link.quantile_lower((-p).ln_1p()))
    }
}

/// `F_nu(t)`.
pub fn t_cdf(dist: TDist, t: f64) -> f64 {
    dist.cdf(t)
}

/// `F_nu^{-1}(p)`.
pub fn t_quantile(dist: TDist, p: f64) -> Result<f64> {
    dist.quantile(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_cdf_at_zero_is_half() {
        for &nu in &[0.5, 1.0, 3.0, 1000.0] {
            assert_eq!(t_cdf(TDist::new(nu).unwrap(), 0.0), 0.5);
        }
    }

    #[test]
    fn cauchy_closed_form() {
        let d = TDist::new(1.0).unwrap();
        assert!((t_cdf(d, 1.0) - 0.75).abs() < 1e-14);
        for &t in &[-30.0, -2.0, -0.3, 0.7, 4.0, 1e3] {
            let want = 0.5 + f64::atan(t) / PI;
            assert!((t_cdf(d, t) - want).abs() < 1e-14, "t={t}");
        }
        assert!((t_quantile(d, 0.75).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nu_two_closed_form() {
        // F_2(t) = 1/2 + t / (2 sqrt(2 + t^2))
        let d = TDist::new(2.0).unwrap();
        for &t in &[-50.0_f64, -1.5, 0.1, 3.0] {
            let want = 0.5 + t / (2.0 * (2.0 + t * t).sqrt());
            assert!((t_cdf(d, t) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn median_and_domain() {
        let d = TDist::new(3.0).unwrap();
        assert_eq!(t_quantile(d, 0.5).unwrap(), 0.0);
        assert!(t_quantile(d, 0.0).is_err());
        assert!(t_quantile(d, 1.0).is_err());
        assert!(TDist::new(0.0).is_err());
        assert!(TDist::new(-1.0).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        let d = TDist::new(7.0).unwrap();
        let t = t_quantile(d, 0.99).unwrap();
        assert!((t_cdf(d, t) - 0.99).abs() < 1e-10);
        assert!((t - 2.997_951_566_868_529).abs() < 1e-9);
    }

    #[test]
    fn extreme_lower_tail() {
        let d = TDist::new(3.0).unwrap();
        let w = Link::Student(d).quantile_lower(-500.0);
        assert!((d.ln_cdf(w) + 500.0).abs() < 1e-9, "{w}");
        let w = Link::Normal.quantile_lower(-5000.0);
        assert!((StdNormal.ln_cdf(w) + 5000.0).abs() < 1e-9, "{w}");
    }

    #[test]
    fn normal_log_cdf_matches_erfc_across_cutoff() {
        for &x in &[-36.9, -37.1, -20.0, -1.0, 0.0, 2.0, 6.0] {
            let direct = (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln();
            assert!((StdNormal.ln_cdf(x) - direct).abs() < 1e-11 * direct.abs().max(1.0), "{x}");
        }
        // Far beyond the erfc range the log-CDF stays finite.
        let v = StdNormal.ln_cdf(-1e3);
        assert!(v.is_finite() && v < -4.9e5);
    }

    #[test]
    fn student_large_nu_is_close_to_normal() {
        let d = TDist::new(1e6).unwrap();
        for &x in &[-3.0, -1.0, 0.5, 2.5] {
            assert!((t_cdf(d, x) - StdNormal.cdf(x)).abs() < 1e-5);
        }
    }
}
