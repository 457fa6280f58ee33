//! Adaptive resampling-based training for imbalanced tabular classification,
//! with resampling and loss-based baselines, metrics, significance tests and
//! an experiment harness.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod art;
pub mod data;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod resample;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
