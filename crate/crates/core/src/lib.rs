//! Overbounding Gauss-Markov process models for Kalman filter design when the
//! correlation time constant is only known to lie in an interval.
//!
//! * [`gmp`] — first-order GMP specification, PSDs and autocovariance.
//! * [`bound`] — continuous, discrete and non-stationary bound parameters.
//! * [`verify`] — PSD dominance, autocovariance-matrix and `k0` scans.
//! * [`kf`] — covariance recursion and true error covariance of a mismatched filter.
//! * [`sim`] — seeded Monte Carlo simulation.
//! * [`experiments`] — CSV dataset generators and Monte Carlo validation.

pub mod bound;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gmp;
pub mod grid;
pub mod kf;
pub mod sim;
pub mod verify;

pub use bound::{
    acm2, continuous_bound, discrete_bound, nonstationary_bound, nonstationary_k0, truth_acm2, BoundMode, BoundModel,
};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use gmp::{
    autocov_nonstationary, gmp_discrete_params, psd_continuous, psd_discrete, DiscreteGmpParams, GmpSpec, SamplingSpec,
    TauInterval, VarianceInterval,
};
pub use grid::FrequencyGrid;

/// Library version recorded in dataset manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
