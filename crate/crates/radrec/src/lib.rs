//! Reconstruction of high-resolution radiance fields from spatially
//! oversampled observations.
//!
//! An oversampled sensor records overlapping footprint averages of the
//! scene. This crate recovers the per-pixel field behind those averages
//! in two stages: a *decomposition* stage solves one small weighted
//! least-squares problem per observation over the pixels its footprint
//! covers, and a *synthesis* stage combines the many per-pixel estimates
//! that result, weighting them by the leading eigenvector of their
//! correlation matrix. The crate also ships the full validation harness
//! around that pipeline: a sequential Gaussian field simulator with a
//! spherical variogram and Gamma histogram transform, a noisy
//! oversampler, difference metrics, and a scenario benchmark runner.
//!
//! Entry points:
//!
//! - [`field::simulate_field`] — generate a ground-truth field;
//! - [`oversample::oversample`] — turn a field into noisy observations;
//! - [`synthesis::reconstruct`] — recover the field from observations;
//! - [`metrics::diff_metrics`] — compare reconstruction against truth;
//! - [`bench::run_scenario`] / [`bench::benchmark_table`] — replicate
//!   studies over scenario grids;
//! - [`cli::run`] — the `radrec` command-line front end.
//!
//! Every stochastic step draws from [`rng::RngSpec`] streams, so any
//! result is reproducible from its seed regardless of thread count.

pub mod bench;
pub mod cli;
pub mod design;
pub mod eigen;
pub mod error;
pub mod field;
pub mod grid;
pub mod kernel;
pub mod local;
pub mod metrics;
pub mod oversample;
pub mod rng;
pub mod special;
pub mod synthesis;

pub use error::{Error, Result};
