//! Numerical laboratory for spectral lower bounds of Laplacians on perforated
//! convex domains and the resulting low-energy uncertainty principle.
//!
//! Every algorithm is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`.

pub mod bounds;
pub mod discretize;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod spectral;
pub mod stochastic;
pub mod ucp;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ConvexDomain = geometry::ConvexDomain<f64>;
pub type BallUnion = geometry::BallUnion<f64>;
pub type GridDiscretization = discretize::GridDiscretization<f64>;
pub type SparseSymmetricOperator = discretize::SparseSymmetricOperator<f64>;
