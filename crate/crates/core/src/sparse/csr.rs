//! Compressed sparse row storage in canonical form.
//!
//! Every `CsrMatrix` keeps its column indices strictly increasing inside each
//! row. Constructors either verify that or produce it (triplets are sorted and
//! summed), so downstream code never has to deal with duplicates.

use serde::{Deserialize, Serialize};

use super::SparseError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, checking the canonical-form invariants.
    pub fn new(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if row_offsets.len() != nrows + 1 {
            return Err(SparseError::InvalidStructure(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                nrows + 1
            )));
        }
        if row_offsets[0] != 0 {
            return Err(SparseError::InvalidStructure("row_offsets[0] must be 0".into()));
        }
        if row_offsets[nrows] != col_indices.len() || col_indices.len() != values.len() {
            return Err(SparseError::InvalidStructure(format!(
                "row_offsets[nrows] = {}, col_indices = {}, values = {}",
                row_offsets[nrows],
                col_indices.len(),
                values.len()
            )));
        }
        for r in 0..nrows {
            let (start, end) = (row_offsets[r], row_offsets[r + 1]);
            if start > end {
                return Err(SparseError::InvalidStructure(format!("row_offsets decreases at row {r}")));
            }
            let cols = &col_indices[start..end];
            for (k, &c) in cols.iter().enumerate() {
                if c >= ncols {
                    return Err(SparseError::IndexOutOfRange { index: c, bound: ncols });
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(SparseError::InvalidStructure(format!(
                        "row {r} is not strictly increasing in column index"
                    )));
                }
            }
        }
        Ok(Self { nrows, ncols, row_offsets, col_indices, values })
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    ///
    /// Duplicates are accumulated in input order, so two triplet lists that
    /// present the same values in the same order give bitwise equal entries.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self, SparseError> {
        for &(r, c, _) in triplets {
            if r >= nrows {
                return Err(SparseError::IndexOutOfRange { index: r, bound: nrows });
            }
            if c >= ncols {
                return Err(SparseError::IndexOutOfRange { index: c, bound: ncols });
            }
        }
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        // stable: duplicates keep insertion order
        order.sort_by_key(|&t| (triplets[t].0, triplets[t].1));

        let mut row_offsets = vec![0usize; nrows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for &t in &order {
            let (r, c, v) = triplets[t];
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_indices.push(c);
                values.push(v);
                row_offsets[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Ok(Self { nrows, ncols, row_offsets, col_indices, values })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, row_offsets: vec![0; nrows + 1], col_indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, row_offsets: (0..=n).collect(), col_indices: (0..n).collect(), values: vec![1.0; n] }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    /// Builds a matrix from row-major dense storage, keeping only nonzero entries.
    pub fn from_dense(nrows: usize, ncols: usize, dense: &[f64]) -> Self {
        assert_eq!(dense.len(), nrows * ncols, "dense buffer has wrong length");
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for r in 0..nrows {
            for c in 0..ncols {
                let v = dense[r * ncols + c];
                if v != 0.0 {
                    col_indices.push(c);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Self { nrows, ncols, row_offsets, col_indices, values }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for (r, c, v) in self.iter() {
            out[r * self.ncols + c] = v;
        }
        out
    }

    /// `n×n` tridiagonal matrix with constant bands.
    pub fn tridiagonal(n: usize, lower: f64, diag: f64, upper: f64) -> Self {
        let mut t = Vec::with_capacity(3 * n);
        for i in 0..n {
            if i > 0 {
                t.push((i, i - 1, lower));
            }
            t.push((i, i, diag));
            if i + 1 < n {
                t.push((i, i + 1, upper));
            }
        }
        Self::from_triplets(n, n, &t).expect("indices in range")
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_offsets[r], self.row_offsets[r + 1]);
        (&self.col_indices[s..e], &self.values[s..e])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `y = A x`, writing into a caller-provided buffer.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), SparseError> {
        if x.len() != self.ncols || y.len() != self.nrows {
            return Err(SparseError::DimensionMismatch {
                expected: (self.nrows, self.ncols),
                found: (y.len(), x.len()),
            });
        }
        for (r, yr) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for (r, c, v) in self.iter() {
            let dst = next[c];
            col_indices[dst] = r;
            values[dst] = v;
            next[c] += 1;
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, row_offsets, col_indices, values }
    }

    /// Sparse product `self · other` (Gustavson's row-wise algorithm).
    pub fn matmul(&self, other: &CsrMatrix) -> Result<CsrMatrix, SparseError> {
        if self.ncols != other.nrows {
            return Err(SparseError::DimensionMismatch {
                expected: (self.ncols, self.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let n = other.ncols;
        let mut acc = vec![0.0; n];
        let mut marker = vec![usize::MAX; n];
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut pattern = Vec::new();
        for r in 0..self.nrows {
            pattern.clear();
            let (acols, avals) = self.row(r);
            for (&k, &a) in acols.iter().zip(avals) {
                let (bcols, bvals) = other.row(k);
                for (&c, &b) in bcols.iter().zip(bvals) {
                    if marker[c] != r {
                        marker[c] = r;
                        acc[c] = 0.0;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                col_indices.push(c);
                values.push(acc[c]);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix { nrows: self.nrows, ncols: n, row_offsets, col_indices, values })
    }

    /// `self + alpha * other`, with the union pattern.
    pub fn add_scaled(&self, alpha: f64, other: &CsrMatrix) -> Result<CsrMatrix, SparseError> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(SparseError::DimensionMismatch {
                expected: (self.nrows, self.ncols),
                found: (other.nrows, other.ncols),
            });
        }
        let mut t: Vec<(usize, usize, f64)> = self.iter().collect();
        t.extend(other.iter().map(|(r, c, v)| (r, c, alpha * v)));
        CsrMatrix::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Submatrix `A[rows, cols]`, both index lists sorted and duplicate-free.
    pub fn extract_submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<CsrMatrix, SparseError> {
        check_index_set(rows, self.nrows)?;
        check_index_set(cols, self.ncols)?;
        let mut local_col = vec![usize::MAX; self.ncols];
        for (q, &c) in cols.iter().enumerate() {
            local_col[c] = q;
        }
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        row_offsets.push(0);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            let (rc, rv) = self.row(r);
            // global column order is increasing, and so is the local one
            for (&c, &v) in rc.iter().zip(rv) {
                let q = local_col[c];
                if q != usize::MAX {
                    col_indices.push(q);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_offsets, col_indices, values })
    }

    /// Principal submatrix `A[idx, idx]`.
    pub fn principal_submatrix(&self, idx: &[usize]) -> Result<CsrMatrix, SparseError> {
        self.extract_submatrix(idx, idx)
    }

    /// Galerkin projection `Pᵀ A P`, with `self` playing the role of `A`.
    pub fn galerkin(&self, p: &CsrMatrix) -> Result<CsrMatrix, SparseError> {
        galerkin_product(p, self)
    }

    /// Largest `|A[i,j] - A[j,i]|` over the stored pattern, or infinity if the patterns differ.
    pub fn symmetry_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let t = self.transpose();
        if t.row_offsets != self.row_offsets || t.col_indices != self.col_indices {
            return f64::INFINITY;
        }
        self.values.iter().zip(&t.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        self.symmetry_defect() <= rel_tol * self.max_abs()
    }

    /// Structural pattern of `A + Aᵀ` without the diagonal, as adjacency lists.
    pub fn symmetric_adjacency(&self) -> Vec<Vec<usize>> {
        assert!(self.is_square(), "adjacency needs a square matrix");
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nrows];
        for (r, c, _) in self.iter() {
            if r != c {
                adj[r].push(c);
                adj[c].push(r);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// `Pᵀ A P` in canonical CSR form.
pub fn galerkin_product(p: &CsrMatrix, a: &CsrMatrix) -> Result<CsrMatrix, SparseError> {
    if !a.is_square() || p.nrows != a.nrows {
        return Err(SparseError::DimensionMismatch { expected: (a.nrows, a.nrows), found: (p.nrows, p.ncols) });
    }
    let ap = a.matmul(p)?;
    p.transpose().matmul(&ap)
}

fn check_index_set(idx: &[usize], bound: usize) -> Result<(), SparseError> {
    for (k, &i) in idx.iter().enumerate() {
        if i >= bound {
            return Err(SparseError::IndexOutOfRange { index: i, bound });
        }
        if k > 0 && idx[k - 1] >= i {
            return Err(SparseError::InvalidIndexSet(format!("index set not sorted/unique at position {k}")));
        }
    }
    Ok(())
}
