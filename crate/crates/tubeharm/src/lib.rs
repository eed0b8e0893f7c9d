//! Numerical harmonic analysis on tube domains over polyhedral cones.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values, and
// index loops mirror the coordinate formulas they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cone;
pub mod error;
pub mod grid;
pub mod harness;
pub mod numerics;
pub mod operators;
pub mod poisson;
pub mod spectral;
pub mod wavelet;

pub use error::{Error, Result};
