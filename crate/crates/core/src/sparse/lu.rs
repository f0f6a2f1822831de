//! Left-looking sparse LU with threshold partial pivoting (Gilbert–Peierls).
//!
//! Column `k` of the factors is obtained from a sparse triangular solve with the
//! already computed columns of `L`; its nonzero pattern is the reach of
//! `A(:, q[k])` in the graph of `L`, found by depth-first search. The pivot is
//! the largest unpivoted entry unless the diagonal entry of the column is within
//! `pivot_threshold` of it, in which case the diagonal is kept.

use super::{CsrMatrix, SparseError};

#[derive(Clone, Debug)]
pub(crate) struct SparseLu {
    n: usize,
    // unit lower factor, column-wise, diagonal stored first; row indices are pivot positions
    l_ptr: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    // upper factor, column-wise, diagonal stored last
    u_ptr: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    /// `row_pos[i]` = pivot position of original row `i`.
    pub(crate) row_pos: Vec<usize>,
    /// `col_perm[k]` = original column eliminated at step `k`.
    pub(crate) col_perm: Vec<usize>,
}

impl SparseLu {
    pub(crate) fn factor(a: &CsrMatrix, col_perm: Vec<usize>, pivot_threshold: f64) -> Result<Self, SparseError> {
        let n = a.nrows();
        // CSC of A is the CSR of Aᵀ
        let at = a.transpose();
        let (a_ptr, a_idx, a_val) = (at.row_offsets(), at.col_indices(), at.values());
        let singular_tol = n as f64 * f64::EPSILON * a.max_abs();

        let mut l_ptr = Vec::with_capacity(n + 1);
        let mut l_idx = Vec::new();
        let mut l_val = Vec::new();
        let mut u_ptr = Vec::with_capacity(n + 1);
        let mut u_idx = Vec::new();
        let mut u_val = Vec::new();
        let mut pinv: Vec<Option<usize>> = vec![None; n];

        let mut x = vec![0.0; n];
        let mut marked = vec![false; n];
        let mut pattern: Vec<usize> = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = Vec::new();

        for k in 0..n {
            l_ptr.push(l_idx.len());
            u_ptr.push(u_idx.len());
            let col = col_perm[k];
            let (bs, be) = (a_ptr[col], a_ptr[col + 1]);

            // symbolic: reach of A(:,col) in the graph of L, in postorder
            pattern.clear();
            for &start in &a_idx[bs..be] {
                if marked[start] {
                    continue;
                }
                marked[start] = true;
                stack.push((start, 0));
                while let Some(top) = stack.len().checked_sub(1) {
                    let (j, mut next) = stack[top];
                    let children: &[usize] = match pinv[j] {
                        Some(jj) => &l_idx[l_ptr[jj] + 1..l_ptr[jj + 1]],
                        None => &[],
                    };
                    let mut descended = false;
                    while next < children.len() {
                        let i = children[next];
                        next += 1;
                        if !marked[i] {
                            stack[top].1 = next;
                            marked[i] = true;
                            stack.push((i, 0));
                            descended = true;
                            break;
                        }
                    }
                    if !descended {
                        stack.pop();
                        pattern.push(j);
                    }
                }
            }

            // numeric: x = L \ A(:,col) over the pattern in topological order
            for &i in &pattern {
                x[i] = 0.0;
            }
            for p in bs..be {
                x[a_idx[p]] = a_val[p];
            }
            for &j in pattern.iter().rev() {
                if let Some(jj) = pinv[j] {
                    let xj = x[j];
                    for p in l_ptr[jj] + 1..l_ptr[jj + 1] {
                        x[l_idx[p]] -= l_val[p] * xj;
                    }
                }
            }

            // pivot selection among unpivoted rows, U entries for pivoted ones
            let mut best: Option<usize> = None;
            let mut best_abs = -1.0;
            for &i in pattern.iter().rev() {
                match pinv[i] {
                    None => {
                        let t = x[i].abs();
                        if t > best_abs {
                            best_abs = t;
                            best = Some(i);
                        }
                    }
                    Some(pos) => {
                        u_idx.push(pos);
                        u_val.push(x[i]);
                    }
                }
            }
            let mut piv = match best {
                Some(i) if best_abs > singular_tol => i,
                _ => {
                    for &i in &pattern {
                        marked[i] = false;
                    }
                    return Err(SparseError::SingularPivot { step: k, column: col, magnitude: best_abs.max(0.0) });
                }
            };
            if pinv[col].is_none() && marked[col] && x[col].abs() >= pivot_threshold * best_abs {
                piv = col;
            }
            let pivot = x[piv];
            u_idx.push(k);
            u_val.push(pivot);
            pinv[piv] = Some(k);
            l_idx.push(piv);
            l_val.push(1.0);
            for &i in pattern.iter().rev() {
                if pinv[i].is_none() {
                    l_idx.push(i);
                    l_val.push(x[i] / pivot);
                }
                x[i] = 0.0;
                marked[i] = false;
            }
        }
        l_ptr.push(l_idx.len());
        u_ptr.push(u_idx.len());

        let row_pos: Vec<usize> = pinv.into_iter().map(|p| p.expect("every row pivoted")).collect();
        for i in l_idx.iter_mut() {
            *i = row_pos[*i];
        }
        Ok(Self { n, l_ptr, l_idx, l_val, u_ptr, u_idx, u_val, row_pos, col_perm })
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn factor_nnz(&self) -> usize {
        self.l_val.len() + self.u_val.len()
    }

    /// Solves `A x = b` in place.
    pub(crate) fn solve_in_place(&self, b: &mut [f64], work: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            work[self.row_pos[i]] = b[i];
        }
        for k in 0..n {
            let xk = work[k];
            if xk != 0.0 {
                for p in self.l_ptr[k] + 1..self.l_ptr[k + 1] {
                    work[self.l_idx[p]] -= self.l_val[p] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            let diag_pos = self.u_ptr[k + 1] - 1;
            let xk = work[k] / self.u_val[diag_pos];
            work[k] = xk;
            if xk != 0.0 {
                for p in self.u_ptr[k]..diag_pos {
                    work[self.u_idx[p]] -= self.u_val[p] * xk;
                }
            }
        }
        for k in 0..n {
            b[self.col_perm[k]] = work[k];
        }
    }
}
