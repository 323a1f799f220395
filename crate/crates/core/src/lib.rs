//! Matrix-free second-order optimization over real inner-product spaces.
//!
//! The crate is organized around the three derivative objects of a real
//! functional `f` on a space of multiarrays: the gradient `∇f|x`, the
//! bilinear Hessian `𝓗|x(·,·)` and the Hessian operator `H|x(·)`. Problems
//! implement [`objective::Objective`]; the optimizers in [`solvers`] use the
//! bilinear Hessian for step sizes (`α = −⟨∇f, s⟩/𝓗(s, s)`), for Daniel's
//! conjugacy rule and, through the Hessian operator, for truncated Newton
//! steps. [`oracle`] holds finite-difference and polarization checks that
//! validate a hand-derived model without trusting it.
//!
//! This crate depends only on `core` and `alloc`. FFT-backed operators, file
//! formats and the benchmark harness live in the `bhess` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod field;
pub mod linear;
pub mod objective;
pub mod oracle;
pub mod poisson;
pub mod solvers;

pub use error::{Error, Result};
pub use field::{Field, ScalarKind};
pub use linear::LinearMap;
pub use objective::{LocalModel, Objective};
