//! Empirical-Bayes estimation of Monod reaction kinetics.
//!
//! A Monod rate `w(c) = alpha * prod_i h_i(c_i)` is fitted to noisy rate
//! observations by Monte-Carlo EM: log-Gaussian priors on the half-saturation
//! and half-inhibition constants are tuned from the data, the posterior is
//! explored with Metropolis-Hastings within Gibbs sampling (classical or
//! enforced retry-until-accept), and the posterior mean is reported.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` / `*32` aliases below fix the precision.

// `!(x > 0)` is used on purpose so that NaN takes the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod datagen;
pub mod em;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod priors;
pub mod report;
pub mod sampler;
pub mod scalar;

pub use em::{run_em, EmConfig, EmOutcome, EmTrace, IterationRecord, KnownValue};
pub use error::{Error, ErrorKind, Result};
pub use metrics::{FitReport, ModulationFit};
pub use model::{AlphaMle, Dataset, KineticParams, ParamKind, ParamSlot};
pub use priors::{HyperParams, ProposalWidth};
pub use sampler::{ChainState, Sampler, SamplerConfig, SamplerMode};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type KineticParams64 = KineticParams<f64>;
pub type KineticParams32 = KineticParams<f32>;
pub type HyperParams64 = HyperParams<f64>;
pub type HyperParams32 = HyperParams<f32>;
pub type ChainState64 = ChainState<f64>;
pub type ChainState32 = ChainState<f32>;
pub type EmOutcome64 = EmOutcome<f64>;
pub type EmOutcome32 = EmOutcome<f32>;
