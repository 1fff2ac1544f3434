//! Adaptive estimation of the stationary density and the transition density of
//! a Markov chain observed with additive noise of known law.
//!
//! Estimators are projections on sinc (Shannon) spaces, computed from
//! deconvolved empirical coefficients and selected by penalized contrasts.

pub mod calibrate;
pub mod error;
pub mod estimator1d;
pub mod estimator2d;
pub mod fourier;
pub mod kernel;
pub mod noise;
pub mod risk;
pub mod simulate;
pub mod special;
pub mod transition;

pub use error::{Error, Result};
