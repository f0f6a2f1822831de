//! Sparse matrices, products and direct solvers.

mod csr;
mod dense_lu;
mod factor;
mod lu;
pub mod mtx;
pub mod ordering;

use thiserror::Error;

pub use csr::{galerkin_product, CsrMatrix};
pub use factor::{factorize, Backend, BackendConfig, Factorization};
pub use mtx::{read_matrix_market, read_matrix_market_file, write_matrix_market, write_matrix_market_file};
pub use ordering::Ordering;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (usize, usize), found: (usize, usize) },
    #[error("index {index} out of range (bound {bound})")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("matrix must be square, got {nrows}×{ncols}")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("singular pivot at elimination step {step} (column {column}, |pivot| = {magnitude:e})")]
    SingularPivot { step: usize, column: usize, magnitude: f64 },
    #[error("invalid backend configuration: {0}")]
    InvalidConfig(String),
    #[error("Matrix Market parse error at line {line}: {message}")]
    MatrixMarket { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Euclidean inner product.
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}
