//! Inexact proximal point method for ρ-weakly convex functions.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only the numerical
//! core: the problem abstraction and its instance zoo, Moreau-envelope and
//! proximal-operator oracles, the contraction-based inner solver for the
//! implicit step equation, and the outer proximal point driver with its
//! inequality instrumentation. File formats, configuration and the command
//! line live in the `weakprox-cli` companion crate.
//!
//! The outer method, for step parameters `0 < λ̄ < 2γₖ < λₖ < 1/ρ`, computes
//!
//! ```text
//! zᵏ   = xᵏ − (λₖ − γₖ) ∇e_{γₖ}f(zᵏ)          (fixed point of a contraction)
//! xᵏ⁺¹ = zᵏ − γₖ (λₖ − γₖ)⁻¹ (xᵏ − zᵏ)          (= P_{λₖ}f(xᵏ))
//! ```
//!
//! ```
//! use weakprox::{algorithm, problems};
//!
//! let (problem, stationary) = problems::make_example1();
//! let schedule = algorithm::Schedule::constant(0.1, 0.25, 0.15, problem.rho());
//! let locality = algorithm::LocalityConfig::derive(
//!     stationary.x_bar.clone(),
//!     0.2,
//!     &schedule,
//!     1,
//!     weakprox::fixedpoint::SigmaPolicy::InverseLipschitzSquared,
//! )
//! .unwrap();
//! let opts = algorithm::RunOptions::new(1e-8, 50);
//! let report = algorithm::run(&problem, &[1.05], &schedule, &locality, &opts).unwrap();
//! assert!((report.x_final[0] - 1.0).abs() < 1e-8);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod algorithm;
pub mod envelope;
mod error;
pub mod fixedpoint;
pub mod linalg;
pub mod problems;
mod report;

pub use error::{Error, Result};
pub use report::{child_rng, CheckReport};
