//! Spectral community recovery for stochastic block models perturbed by a
//! latent Gaussian-kernel geometric graph.
//!
//! The adjacency matrix is `A ~ Bernoulli(Q)` with
//! `Q = P0 + kappa P` off the diagonal, where `P0` is the two-block SBM
//! mean and `P_ij = exp(-gamma |X_i - X_j|^2)` for standard Gaussian latent
//! points `X_i` in the plane. The modules follow the pipeline:
//!
//! - [`model`]: parameters, seeds, latent positions, community vector.
//! - [`graphgen`]: kernel, block and conditional-mean matrices; edge sampling.
//! - [`eigen`]: dense symmetric eigensolver and spectrum summaries.
//! - [`resolvent`]: secular equation for the eigenvalues of `P0 + kappa P`.
//! - [`recovery`]: spectral estimators and overlap metrics.
//! - [`theory`]: closed forms, regime checks, isolated vertices.
//! - [`moments`]: exact trace moments from cycle quotients.
//! - [`experiment`]: seeded single runs, sweeps and report files.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dump;
pub mod eigen;
pub mod error;
pub mod experiment;
pub mod graphgen;
pub mod model;
pub mod moments;
pub mod numeric;
pub mod recovery;
pub mod resolvent;
pub mod theory;

pub use error::{Error, Result};
pub use model::{make_params, ModelParams, Seed};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
