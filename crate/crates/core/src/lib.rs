//! Equivalence assessment with e-values.
//!
//! The crate computes e-values over a grid of equivalence margins, inverts
//! them into data-dependent equivalence curves that are valid uniformly over
//! the confidence level, calibrates utility-optimal boundary-mixture
//! e-values, merges evidence, runs sequential e-processes and turns curves
//! into loss bounds and decisions.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curves;
pub mod decisions;
pub mod distributions;
pub mod error;
pub mod models;
pub mod numeric;
pub mod optimal;
pub mod sequential;

pub use distributions::DistSpec;
pub use error::{Error, Result};
