//! Square linear operators given only through their action.

use crate::sparse::{CsrMatrix, Factorization, SparseError};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`, overwriting `y`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError>;

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.dim()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }
}

pub(crate) fn check_len(expected: usize, x: &[f64], y: &[f64]) -> Result<(), SparseError> {
    if x.len() != expected || y.len() != expected {
        return Err(SparseError::DimensionMismatch { expected: (expected, expected), found: (x.len(), y.len()) });
    }
    Ok(())
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        self.spmv_into(x, y)
    }
}

/// Applies `A⁻¹` through a direct factorization.
impl LinearOperator for Factorization {
    fn dim(&self) -> usize {
        Factorization::dim(self)
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.dim(), x, y)?;
        y.copy_from_slice(x);
        self.solve_in_place(y)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator(pub usize);

impl LinearOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.0, x, y)?;
        y.copy_from_slice(x);
        Ok(())
    }
}

/// Wraps a closure `f(x, y)` writing `A x` into `y`.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        FnOperator { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.n, x, y)?;
        (self.f)(x, y);
        Ok(())
    }
}

/// Row-major dense matrix of an operator, built column by column from unit vectors.
pub fn assemble_dense(op: &dyn LinearOperator) -> Result<Vec<f64>, SparseError> {
    let n = op.dim();
    let mut dense = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply_into(&e, &mut col)?;
        e[j] = 0.0;
        for i in 0..n {
            dense[i * n + j] = col[i];
        }
    }
    Ok(dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{factorize, BackendConfig};

    #[test]
    fn matrix_and_inverse_compose_to_identity() {
        let a = CsrMatrix::tridiagonal(5, -1.0, 3.0, -1.0);
        let f = factorize(&a, &BackendConfig::default()).unwrap();
        let x = [1.0, -2.0, 0.5, 4.0, 3.0];
        let y = f.apply(&a.apply(&x).unwrap()).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn dense_assembly_of_closure() {
        let op = FnOperator::new(2, |x: &[f64], y: &mut [f64]| {
            y[0] = x[0] + 2.0 * x[1];
            y[1] = 3.0 * x[1];
        });
        assert_eq!(assemble_dense(&op).unwrap(), vec![1.0, 2.0, 0.0, 3.0]);
        assert_eq!(assemble_dense(&IdentityOperator(2)).unwrap(), vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(IdentityOperator(3).apply(&[1.0]).is_err());
    }
}
