//! Solvers for minimizing a convex function over the solution set of a
//! monotone variational inequality.
//!
//! The lower-level constraint is relaxed to `psi_M(x) <= eps` (Minty gap),
//! approximated from below by a growing pool of cutting planes, and enforced
//! through an exact penalty whose parameter is increased only finitely often.

mod barrier;
pub mod algorithms;
pub mod bench;
pub mod error;
pub mod gap;
pub mod geometry;
pub mod linesearch;
pub mod penalty;
pub mod problem;

pub use error::{Error, Result};
pub use geometry::{FeasibleSet, SetKind};
pub use problem::{CournotModel, Objective, Operator, ProblemInstance};
