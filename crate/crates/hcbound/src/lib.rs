//! Estimation-error bounds relating surrogate and target losses over
//! restricted hypothesis classes.
//!
//! The crate evaluates margin-based surrogate losses, computes closed-form
//! minimal conditional risks for linear predictors and one-hidden-layer ReLU
//! networks, builds the piecewise transforms that turn a surrogate excess
//! risk into a zero-one (or adversarial zero-one) guarantee, and checks the
//! resulting bounds against brute-force oracles and Monte Carlo simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod conditional_risk;
pub mod distributions;
pub mod error;
pub mod experiments;
pub mod hypotheses;
pub mod losses;
pub mod quadrature;
pub mod transforms;

pub use error::{Error, Result};
