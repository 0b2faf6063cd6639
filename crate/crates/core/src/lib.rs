//! Numerical laboratory for reflection-positive lattice spin models.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificate;
pub mod chessboard;
pub mod cli;
pub mod error;
pub mod kernels;
pub mod mc;
pub mod mean_field;
pub mod models;
pub mod oracle;
pub mod quadrature;
pub mod spin_wave;
pub mod torus;

pub use error::{Error, Result};
