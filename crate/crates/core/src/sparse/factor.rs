//! Direct solver backends behind a single factorization handle.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::dense_lu::DenseLu;
use super::lu::SparseLu;
use super::ordering::{compute_ordering, Ordering};
use super::{CsrMatrix, SparseError};
use crate::timing::TimeAccumulator;

/// Direct solver backend.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    DenseLu,
    SparseLuNatural,
    SparseLuOrdered,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::DenseLu, Backend::SparseLuNatural, Backend::SparseLuOrdered];

    pub fn as_str(&self) -> &'static str {
        match self {
            Backend::DenseLu => "dense-lu",
            Backend::SparseLuNatural => "sparse-lu-natural",
            Backend::SparseLuOrdered => "sparse-lu-ordered",
        }
    }

    pub fn default_ordering(&self) -> Ordering {
        match self {
            Backend::SparseLuOrdered => Ordering::MinimumDegree,
            _ => Ordering::Natural,
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = SparseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| SparseError::InvalidConfig(format!("unknown backend `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub backend: Backend,
    /// Diagonal entry is kept as pivot when `|a_kk| >= pivot_threshold * max |a_ik|`.
    pub pivot_threshold: f64,
    pub ordering: Ordering,
}

impl BackendConfig {
    pub fn new(backend: Backend) -> Self {
        Self { backend, pivot_threshold: 1.0, ordering: backend.default_ordering() }
    }

    pub fn with_pivot_threshold(mut self, t: f64) -> Self {
        self.pivot_threshold = t;
        self
    }

    pub fn validate(&self) -> Result<(), SparseError> {
        if !(self.pivot_threshold > 0.0 && self.pivot_threshold <= 1.0) {
            return Err(SparseError::InvalidConfig(format!(
                "pivot_threshold must lie in (0, 1], got {}",
                self.pivot_threshold
            )));
        }
        let consistent = match self.backend {
            Backend::DenseLu | Backend::SparseLuNatural => self.ordering == Ordering::Natural,
            Backend::SparseLuOrdered => self.ordering == Ordering::MinimumDegree,
        };
        if !consistent {
            return Err(SparseError::InvalidConfig(format!(
                "backend {} does not support ordering {:?}",
                self.backend, self.ordering
            )));
        }
        Ok(())
    }
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self::new(Backend::SparseLuOrdered)
    }
}

#[derive(Clone, Debug)]
enum FactorData {
    Empty,
    Dense(DenseLu),
    Sparse(SparseLu),
}

/// An LU factorization ready for repeated solves.
///
/// Immutable after construction. The cumulative solve timer is atomic, so
/// concurrent solves through a shared reference are fine.
#[derive(Debug)]
pub struct Factorization {
    backend: Backend,
    n: usize,
    symmetric: bool,
    data: FactorData,
    factor_seconds: f64,
    solve_time: TimeAccumulator,
}

/// Factorizes a square matrix with the configured backend.
pub fn factorize(a: &CsrMatrix, cfg: &BackendConfig) -> Result<Factorization, SparseError> {
    cfg.validate()?;
    if !a.is_square() {
        return Err(SparseError::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    let start = Instant::now();
    let n = a.nrows();
    let data = if n == 0 {
        FactorData::Empty
    } else {
        match cfg.backend {
            Backend::DenseLu => FactorData::Dense(DenseLu::factor(a, cfg.pivot_threshold)?),
            Backend::SparseLuNatural | Backend::SparseLuOrdered => {
                let q = compute_ordering(a, cfg.ordering);
                FactorData::Sparse(SparseLu::factor(a, q, cfg.pivot_threshold)?)
            }
        }
    };
    let factor_seconds = start.elapsed().as_secs_f64();
    Ok(Factorization {
        backend: cfg.backend,
        n,
        symmetric: a.symmetry_defect() == 0.0,
        data,
        factor_seconds,
        solve_time: TimeAccumulator::new(),
    })
}

impl Factorization {
    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Whether the factorized matrix was exactly symmetric.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn factor_seconds(&self) -> f64 {
        self.factor_seconds
    }

    /// Cumulative time spent in forward/backward substitution.
    pub fn solve_seconds(&self) -> f64 {
        self.solve_time.seconds()
    }

    /// Row permutation: `perm[k]` is the original row used as pivot row `k`.
    pub fn row_permutation(&self) -> Vec<usize> {
        match &self.data {
            FactorData::Empty => Vec::new(),
            FactorData::Dense(d) => d.perm.clone(),
            FactorData::Sparse(s) => {
                let mut perm = vec![0; s.n()];
                for (i, &k) in s.row_pos.iter().enumerate() {
                    perm[k] = i;
                }
                perm
            }
        }
    }

    /// Column permutation: `perm[k]` is the original column eliminated at step `k`.
    pub fn column_permutation(&self) -> Vec<usize> {
        match &self.data {
            FactorData::Empty => Vec::new(),
            FactorData::Dense(d) => (0..d.n()).collect(),
            FactorData::Sparse(s) => s.col_perm.clone(),
        }
    }

    /// Stored entries of the factors (`n²` for the dense backend).
    pub fn factor_nnz(&self) -> usize {
        match &self.data {
            FactorData::Empty => 0,
            FactorData::Dense(d) => d.n() * d.n(),
            FactorData::Sparse(s) => s.factor_nnz(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SparseError> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<(), SparseError> {
        self.solve_multi_in_place(x, 1)
    }

    /// Solves for `nrhs` right-hand sides stored column-major in `b`.
    pub fn solve_multi(&self, b: &[f64], nrhs: usize) -> Result<Vec<f64>, SparseError> {
        let mut x = b.to_vec();
        self.solve_multi_in_place(&mut x, nrhs)?;
        Ok(x)
    }

    pub fn solve_multi_in_place(&self, x: &mut [f64], nrhs: usize) -> Result<(), SparseError> {
        if x.len() != self.n * nrhs {
            return Err(SparseError::DimensionMismatch { expected: (self.n, nrhs), found: (x.len(), 1) });
        }
        self.solve_time.time(|| {
            let mut work = vec![0.0; self.n];
            for col in x.chunks_exact_mut(self.n.max(1)).take(nrhs) {
                match &self.data {
                    FactorData::Empty => {}
                    FactorData::Dense(d) => d.solve_in_place(col, &mut work),
                    FactorData::Sparse(s) => s.solve_in_place(col, &mut work),
                }
            }
        });
        Ok(())
    }
}
