//! Numerical laboratory for the Marchenko–Pastur theorem.
//!
//! The crate is organised bottom-up:
//!
//! - [`matcore`]: dense symmetric eigensolver, resolvent traces, rank-one
//!   updates, Haar frames and spectral norms.
//! - [`mp_law`]: closed-form analytics for the Marchenko–Pastur law `μ_ρ`.
//! - [`ensembles`]: random-vector families that satisfy or violate the
//!   concentration hypotheses, each with its exact population covariance.
//! - [`spectra`]: sample covariances, empirical spectral distributions and
//!   their distance to `μ_ρ`.
//! - [`conditions`]: Monte-Carlo diagnostics for the Lindeberg functional,
//!   quadratic-form concentration and the projection (MP) property.
//! - [`equivalence`]: the Gaussian-swap resolvent-gap experiment.
//! - [`experiment`]: configuration, trial dispatch and CSV/JSON reporting
//!   used by the `mplab` binary.
//!
//! All randomness flows through [`rng::StreamKey`], a counter-based keyed
//! stream, so every number is a pure function of `(seed, experiment,
//! trial, column)` and independent of thread count.

pub mod conditions;
pub mod ensembles;
pub mod equivalence;
pub mod error;
pub mod experiment;
pub mod matcore;
pub mod mp_law;
pub mod quad;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};
pub use num_complex::Complex64;
