//! Dense real linear algebra sized for networks of a few dozen buses.
//!
//! Everything here is `O(n³)` dense code with no external BLAS. The
//! tolerances below are shared by the factorizations and their tests.

mod lu;
mod matrix;
mod svd;

pub use lu::{invert, lu_solve};
pub use matrix::DenseMatrix;
pub use svd::{svd, top_singular_pair, SvdResult};

use thiserror::Error;

/// Relative pivot threshold: a pivot below `PIVOT_TOL * ‖a‖∞` is singular.
pub const PIVOT_TOL: f64 = 1e-12;
/// One-sided Jacobi stops once every column pair has
/// `|wᵢ·wⱼ| ≤ SVD_OFFDIAG_TOL · ‖wᵢ‖‖wⱼ‖`.
pub const SVD_OFFDIAG_TOL: f64 = 1e-12;
/// Sweep cap for one-sided Jacobi.
pub const SVD_MAX_SWEEPS: usize = 100;
/// Symmetry tolerance accepted by [`top_singular_pair`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "matrix is singular to working precision (pivot {pivot:e} below {threshold:e} at column {column})"
    )]
    Singular {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal ratio {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
}
