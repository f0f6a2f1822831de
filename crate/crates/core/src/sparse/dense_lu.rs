//! Dense LU with threshold row pivoting. Reference backend for small systems.

use super::{CsrMatrix, SparseError};

#[derive(Clone, Debug)]
pub(crate) struct DenseLu {
    n: usize,
    // row-major packed L\U
    lu: Vec<f64>,
    /// `perm[k]` = original row placed at position `k`.
    pub(crate) perm: Vec<usize>,
}

impl DenseLu {
    pub(crate) fn factor(a: &CsrMatrix, pivot_threshold: f64) -> Result<Self, SparseError> {
        let n = a.nrows();
        let mut lu = a.to_dense();
        let mut perm: Vec<usize> = (0..n).collect();
        let singular_tol = n as f64 * f64::EPSILON * a.max_abs();

        for k in 0..n {
            let (mut p, mut best) = (k, -1.0);
            for r in k..n {
                let t = lu[r * n + k].abs();
                if t > best {
                    best = t;
                    p = r;
                }
            }
            if best <= singular_tol {
                return Err(SparseError::SingularPivot { step: k, column: k, magnitude: best.max(0.0) });
            }
            if lu[k * n + k].abs() >= pivot_threshold * best {
                p = k;
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / pivot;
                if f == 0.0 {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    lu[r * n + c] -= f * lu[k * n + c];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            work[k] = b[self.perm[k]];
        }
        for r in 0..n {
            let s: f64 = (0..r).map(|c| self.lu[r * n + c] * work[c]).sum();
            work[r] -= s;
        }
        for r in (0..n).rev() {
            let s: f64 = (r + 1..n).map(|c| self.lu[r * n + c] * work[c]).sum();
            work[r] = (work[r] - s) / self.lu[r * n + r];
        }
        b[..n].copy_from_slice(&work[..n]);
    }
}
