//! Small self-contained linear algebra kernels: dense matrices, banded LU,
//! and a bandwidth-reducing sparse direct solver.

mod banded;
mod dense;
mod sparse;

pub use banded::BandLu;
pub use dense::{generalized_symmetric_eigen, Cholesky, DenseLu, Mat, SymmetricEigen};
pub use sparse::{reverse_cuthill_mckee, CsrMatrix, SparseLu, Triplets};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot} at row {row}, condition estimate {condition:.3e})")]
    Singular { row: usize, pivot: f64, condition: f64 },
    #[error("matrix is not positive definite (row {row})")]
    NotPositiveDefinite { row: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub(crate) fn dot<T: crate::Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
