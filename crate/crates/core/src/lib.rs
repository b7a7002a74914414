//! Numerical laboratory for the regularized heat-conducting compressible
//! Navier–Stokes system on intervals and rectangles.

// `!(x > 0.0)` guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod artifacts;
pub mod config;
pub mod constitutive;
pub mod continuation;
pub mod degiorgi;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod exec;
pub mod initdata;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
