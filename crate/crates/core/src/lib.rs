//! Gibbs samplers for Bayesian binary regression under robit (Student-t link)
//! and probit models.
//!
//! The crate provides the data-augmentation (DA) chain and its sandwich
//! variant for both links, the special functions and random-variate
//! generators they rely on, MCMC output diagnostics, and a set of numerical
//! checks for the matrix identities and tail bounds behind the trace-class
//! property of the robit DA operator.

pub mod chains;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use chains::{ChainConfig, ChainKind, ChainState, ModelKind, SampleMatrix};
pub use error::{Error, Result};
pub use linalg::{Dataset, LambdaDiag, Prior, Whitened};
pub use special::{RngStream, TDist, TruncationSide};
