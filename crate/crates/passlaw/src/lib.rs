//! Analysis of repeated-sampling benchmark evaluations.
//!
//! Given per-problem attempt counts from a benchmark where each problem was
//! tried many times, this crate estimates per-problem and aggregate pass@k
//! curves, fits heavy-tailed latent success-probability distributions by
//! maximum likelihood on compound count models, and predicts or classifies
//! power-law scaling of −log(pass@k). A synthetic benchmark generator and a
//! backtesting harness measure how well the competing exponent estimators
//! recover known ground truth.
//!
//! Modules mirror the processing pipeline:
//!
//! * [`ingest`] — attempt logs → validated [`ingest::BenchmarkData`].
//! * [`specfun`] — log-gamma, terminating Gauss 2F1, adaptive quadrature.
//! * [`estimators`] — pass@k estimators and aggregate curves.
//! * [`distributions`] — latent success-probability families, their exact
//!   aggregate curves, asymptotic laws, and left-tail extraction.
//! * [`compound`] — compound count PMFs and maximum-likelihood fitting.
//! * [`powerlaw`] — least-squares and distribution-derived exponent
//!   estimators plus scaling-regime classification.
//! * [`synthbench`] — synthetic ground truth, subsampling, backtesting.

pub mod compound;
pub mod distributions;
mod error;
pub mod estimators;
pub mod ingest;
pub mod powerlaw;
pub mod specfun;
pub mod synthbench;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Library version, for embedding in output artifacts and manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wrapper that stamps a seed onto any serializable artifact.
///
/// Output files produced from seeded computations embed the seed at the top
/// level so an artifact alone identifies its run. The payload fields are
/// flattened alongside `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeededArtifact<T> {
    pub seed: u64,
    #[serde(flatten)]
    pub payload: T,
}

impl<T> SeededArtifact<T> {
    pub fn new(seed: u64, payload: T) -> Self {
        Self { seed, payload }
    }
}
