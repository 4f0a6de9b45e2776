//! Exact verification of connected-neighborhood constructions in products of
//! pairwise co-prime solenoids `Σ_{m_1} × ... × Σ_{m_r}`.
//!
//! All geometry happens on the torus `(S^1)^r` with rational angles, under
//! `f(z_1, ..., z_r) = (z_1^{m_1}, ..., z_r^{m_r})`. Nothing uses floating point.

pub mod arith;
pub mod designer;
pub mod error;
pub mod hitting;
pub mod lifting;
pub mod report;
pub mod torus;
pub mod tower;

pub use arith::{Moduli, Rational};
pub use error::{Error, Result};
