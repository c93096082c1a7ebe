//! Validated lower bounds for the smallest mixed Dirichlet-Neumann Laplacian
//! eigenvalue on staircase subdomains of a right triangle.
//!
//! The crate assembles Crouzeix-Raviart systems with exact integer entries,
//! certifies `lambda_1 >= threshold` with independent rigorous back-ends
//! and drives the exclusion-region search that produces the domain chain.

pub mod certify;
pub mod closedform;
pub mod embedded;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod scalar;
pub mod search;

pub use error::{Error, Result};
