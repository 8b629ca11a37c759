//! Relative entropy of entanglement, taken w.r.t. the set of PPT states, for
//! tensor powers of `d`-dimensional Werner states.
//!
//! The crate solves the permutation-symmetric reduction of the PPT-constrained
//! relative-entropy program for `n` copies, brackets the optimum with closed
//! form primal trial states and dual feasible points, and checks everything
//! against a brute-force dense-matrix oracle at small sizes.
//!
//! All entropic quantities are in bits.
//!
//! Module map:
//!
//! - [`werner`]: closed-form single-copy and asymptotic analytics.
//! - [`symmetric`]: type-class vectors and reduced Kronecker powers.
//! - [`solver`]: log-barrier Newton solver for the reduced program.
//! - [`certificates`]: analytic upper/lower bounds and dual certification.
//! - [`dense`]: dense-matrix ground truth.
//! - [`report`]: grid sweeps and CSV/JSON emission behind the CLI.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod dense;
pub mod error;
pub mod report;
pub mod solver;
pub mod symmetric;
pub mod werner;

pub use error::{Error, Result};
pub use werner::WernerParams;
