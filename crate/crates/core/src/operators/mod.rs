//! Symbolic operators and their matrix representations.

mod assemble;
mod expr;

pub use assemble::{
    adjoint_wrt, assemble, assemble_basis, assemble_grid, momentum_power,
    position_momentum_matrices, MatrixRep,
};
pub use expr::{OperatorExpr, ScalarExpr, Term};
