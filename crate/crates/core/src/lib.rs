//! Expectation-maximization viewed as a Kullback-Leibler regularized proximal
//! method over (constrained) exponential families.
//!
//! The crate is `no_std` and only needs `alloc`. It provides:
//!
//! - [`numerics`]: small dense linear algebra, Jacobi eigensolver, damped
//!   Newton, finite differences and a box-constrained local minimizer.
//! - [`expfam`] and [`families`]: exponential families described by their
//!   log-normalizer, Legendre duality, minimality checks, affine reduction.
//! - [`bregman`] and [`constraint`]: Bregman divergences, KL divergence and
//!   left/right Bregman projections onto constraint sets.
//! - [`proximal`]: the generalized proximal scheme with (partial)
//!   regularizers and inexactness bookkeeping.
//! - [`em`] and [`models`]: EM, conditional Fisher information, accurate and
//!   spare parameter splitting, regularized EM and split programs.
//! - [`geometry`]: alternating e/m-projections and gap pairs.
//! - [`diagnostics`]: Cauchy sums, rate fits, KL exponent estimates and run
//!   classification.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bregman;
pub mod constraint;
pub mod diagnostics;
pub mod em;
mod error;
pub mod expfam;
pub mod families;
pub mod geometry;
pub mod models;
pub mod numerics;
pub mod proximal;

pub use error::{Error, Result};
