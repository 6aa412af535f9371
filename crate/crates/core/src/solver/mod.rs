//! Solvers for symmetric positive-definite block-tridiagonal systems.

mod block;
mod cg;
mod cholesky;
mod eigen;

pub use block::BlockTridiagonalMatrix;
pub use cg::{cg_solve, CgOutcome, Preconditioner};
pub use cholesky::{cholesky_solve, BlockCholesky};
pub use eigen::{max_eigenvalue, min_eigenvalue, EigenEstimate, MAX_EIGEN_ITERATIONS};
