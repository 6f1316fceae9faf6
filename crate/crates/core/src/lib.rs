//! Radon-type transforms on the sphere, the rotation group and S²×S²,
//! with splines, cubature, frames and iterative reconstruction.

// `!(x > y)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretize;
pub mod error;
pub mod frames;
pub mod geometry;
pub mod harmonics;
pub mod io;
pub mod linalg;
pub mod quadrature;
pub mod reconstruct;
pub mod selftest;
pub mod spaces;
pub mod splines;
pub mod transforms;

pub use error::{Error, Manifold, Result};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
