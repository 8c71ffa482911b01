//! Conjugate-gradient type methods with variable SPD preconditioning.
//!
//! The crate implements the general A-orthogonalizing iteration with a
//! memory policy `{m_k}`, the two-term practical PCG recurrence with both
//! common `β` formulas, preconditioners (fixed, worst-case adversarial, inner
//! CG, two-grid with fixed or random coarse grids), audits for the identities
//! that the iteration satisfies in exact arithmetic, and an experiment harness
//! that writes CSV/SVG convergence histories.

pub mod cone;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod preconditioners;
pub mod rng;
pub mod solvers;

pub use error::{FlexError, Result};
