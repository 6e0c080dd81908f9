//! Numerical laboratory for zero-mean periodic traveling waves of the
//! regularized Camassa-Holm equation
//!
//! ```text
//! u_t + ω u_x - u_txx + 3 u u_x = 2 u_x u_xx + u u_xxx
//! ```
//!
//! Waves are computed by Fourier-Galerkin Newton continuation in the speed,
//! their linearizations are assembled as symmetric matrices, and the
//! stability criteria built from eigenvalue counts, Floquet data and the
//! slopes of the conserved quantities along the family are evaluated.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod evolution;
pub mod floquet;
pub mod operators;
pub mod spectral;
pub mod stability;
pub mod wave;

pub use error::{Error, Result};
