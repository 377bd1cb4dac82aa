//! Conditional inferential models for prior-free, frequency-calibrated inference.
//!
//! The crate is organized around the association `X = a(θ, U)` between data,
//! parameter, and an unobserved auxiliary variable with a known law. A
//! predictive random set for the auxiliary variable induces belief and
//! plausibility over assertions about θ; conditioning on fully observed
//! features of U (found by the differential-equation technique in [`assoc`])
//! reduces the auxiliary dimension and sharpens inference without losing
//! validity.
//!
//! Module map:
//! - [`numerics`]: distributions, adaptive quadrature, Bessel K0, a
//!   random-walk Metropolis sampler, and counter-based RNG streams.
//! - [`prs`]: nested predictive random sets in ranking-function form.
//! - [`assoc`]: scale-family eta construction and residual checks for
//!   candidate conditioning features.
//! - [`engine`]: conditional CDFs, plausibility, belief, intervals, regions.
//! - [`models`]: the worked models (normal mean, Student-t location, paired
//!   exponential rates, gamma, bivariate-normal correlation, one-way variance
//!   components).
//! - [`validate`]: coverage/uniformity experiment harness and the comparator
//!   intervals (MLE, flat Bayes, Jeffreys Bayes).

pub mod assoc;
pub mod engine;
pub mod error;
pub mod models;
pub mod numerics;
pub mod prs;
pub mod rt;
pub mod validate;

pub use error::{Error, Result};
