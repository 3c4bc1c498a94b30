//! Finite elements for the nonlocal exterior obstacle problem in one dimension.
//!
//! Find w minimizing the fractional energy restricted to pairs with at least
//! one point in Ω, with w prescribed on Σ₁ and bounded by an obstacle on Σ₂.
//! The crate assembles the discrete operators, solves the constrained problem
//! and its two penalizations, and measures the penalty convergence rates.

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod export;
pub mod fixture;
pub mod geometry;
pub mod kernel;
pub mod solvers;

pub use error::{Error, Result, Warning};
