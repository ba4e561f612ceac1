//! Piecewise linear-quadratic (PLQ) programs: function models, first and
//! second directional derivatives, copositivity tests on polyhedral cones,
//! and second-order optimality certificates.
//!
//! All inequality systems use the `A x ≤ b` convention.

pub mod calculus;
pub mod copositivity;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod optimality;
pub mod serde_util;
pub mod settings;
pub mod statmodels;

pub use error::{PlqError, Result};
pub use settings::Settings;
