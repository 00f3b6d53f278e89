//! Sparse-to-dense 3D track auto-labeling.

// `!(x > y)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fixtures;
pub mod formats;
pub mod geometry;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod providers;
pub mod runner;
pub mod sampling;
pub mod simulator;

pub use error::{Error, Result};
