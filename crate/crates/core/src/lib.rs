//! Deterministic equivalents, multi-objective scaling laws, and market-entry
//! thresholds for high-dimensional ridge regression with mixed-objective
//! labels, validated against direct Monte Carlo simulation.
//!
//! The model: inputs carry a power-law covariance spectrum, two target
//! vectors (performance and safety) have power-law alignment with correlation
//! `rho`, and a company labels an `alpha` fraction of its data with the
//! performance target before running ridge regression. On top of that sit
//! the effective-regularizer fixed point ([`kappa`]), closed-form
//! deterministic equivalents of both population losses ([`det_equiv`]),
//! scaling laws of the optimally regularized loss with their regime
//! structure ([`scaling`]), market-entry thresholds between a
//! safety-constrained incumbent and a less constrained entrant ([`market`],
//! [`market_ext`]), and a Monte Carlo harness that validates the closed
//! forms against direct simulation ([`monte_carlo`]).

// Parameter guards are written as `!(x > 0.0)` so NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod det_equiv;
pub mod error;
pub mod kappa;
pub mod market;
pub mod market_ext;
pub mod monte_carlo;
pub mod problem;
pub mod scaling;

pub use error::{Error, Result};
pub use problem::{ExplicitInstance, PowerLawProblem, RidgeConfig, SampleSize};
