//! Student-t CDF and quantile machinery and the primitive random-variate
//! generators used by the chains.

mod beta;
mod dist;
mod random;

pub use beta::{incomplete_beta_ratio, ln_beta, ln_incomplete_beta_pair};
pub use dist::{t_cdf, t_quantile, Link, StdNormal, TDist};
pub use random::{
    sample_gamma, sample_mvn_cholesky, sample_mvn_from_precision, sample_truncated,
    sample_truncated_normal, sample_truncated_t, RngStream, TruncationSide, TAIL_SWITCH_MASS,
};
