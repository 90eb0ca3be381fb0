//! Grids, Hermite-function bases, quadrature and dense eigendecomposition.

mod eigen;
mod grid;
mod hermite;
pub mod linalg;

pub use eigen::{eig_dense, is_real_eigenvalue, Spectrum, ILL_CONDITIONED_LIMIT, INVERSE_LEFT_LIMIT};
pub use grid::{make_grid, BasisSpec, GridSpec, Representation};
pub use hermite::{
    gauss_hermite_rule, graded_origin_rule, hermite_function, hermite_functions, GaussHermiteRule,
    LineRule,
};
