//! Estimation of the marginal laws of the spectral tail process of a
//! regularly varying time series.
//!
//! The crate covers the full pipeline of a threshold-comparison simulation
//! study:
//!
//! - [`distributions`]: Student-t special functions and innovation samplers.
//! - [`models`]: GARCH(1,1), Markov copula chains and stochastic recurrence
//!   equations.
//! - [`truth`]: tail indices, marginal quantiles, spectral survival
//!   probabilities and the pre-asymptotic quantities estimators concentrate
//!   around.
//! - [`estimators`]: forward, backward and Hill-type estimators over
//!   deterministic or order-statistic thresholds, plus tail array sums.
//! - [`bootstrap`]: multiplier block bootstrap and confidence intervals.
//! - [`asymptotics`]: Monte Carlo checks of the limit theory.
//! - [`study`]: replicated experiments, summaries and CSV/SVG reports.

// `!(x > 0.0)` is the house style for rejecting NaN along with bad values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod bootstrap;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod models;
pub mod rng;
pub mod stats;
pub mod study;
pub mod truth;

pub use error::{Error, Result};
pub use stats::Estimate;
