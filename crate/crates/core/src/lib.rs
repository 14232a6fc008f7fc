//! Spiked-covariance toolkit: simulate high-dimensional observations whose
//! population covariance carries a few repeated "spike" eigenvalues above an
//! isotropic noise floor, and jointly estimate the number of distinct spikes
//! `K`, their multiplicities `m_1..m_K` and their values `α_1..α_K` from the
//! eigenvalues of the sample covariance matrix.
//!
//! The crate is organised along the pipeline:
//!
//! - [`model`] — population covariances and complex Gaussian observation
//!   matrices (isotropic spiked model and a steering-vector array model);
//! - [`spectrum`] — sample covariance, descending eigenvalues and consecutive
//!   gaps, the spike-forward map `φ` and its inverse, Marčenko–Pastur bulk
//!   edges, cluster sums and histogram export;
//! - [`estimation`] — the gap-based multiplicity estimator, per-cluster
//!   Gaussian likelihoods of cluster sums, the prior-averaged marginal
//!   likelihood and the joint estimator of `K`;
//! - [`montecarlo`] — seeded repeated trials, noise and dimension sweeps,
//!   CSV/JSON emission and a CLT diagnostic for the cluster sums.
//!
//! Everything downstream of the eigenvalues is generic over the scalar type
//! (see [`num::Scalar`]); the simulation layer works in `Complex<f64>`.

pub mod error;
pub mod estimation;
pub mod model;
pub mod montecarlo;
pub mod num;
pub mod rng;
pub mod spectrum;

pub use error::{Error, Result};

/// Default scalar type used by the simulation layer and the CLI.
pub type Real = f64;

/// Complex scalar of the observation matrices.
pub type Complex = num_complex::Complex<f64>;
