//! Finite-difference discretization of `-1/2 Delta` (Neumann on the host
//! boundary, Dirichlet on obstacles by node removal), of the divergence-form
//! generalization and of the potential `beta * 1_B`.

mod assemble;
mod grid;
mod io;
mod operator;

pub use assemble::{assemble_divergence_form, assemble_laplacian, Checkerboard, CoefficientField, FnCoefficient, ScaledIdentity};
pub use grid::{classify_grid, GridDiscretization, NodeClass};
pub use io::{read_mask, read_matrix_market, write_mask, write_matrix_market};
pub use operator::SparseSymmetricOperator;
