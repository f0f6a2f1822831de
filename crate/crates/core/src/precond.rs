//! Two-level additive overlapping Schwarz preconditioner
//! `M⁻¹ = Φ K₀⁻¹ Φᵀ + Σᵢ Rᵢᵀ Kᵢ⁻¹ Rᵢ`.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coarse::CoarseBasis;
use crate::operator::{check_len, LinearOperator};
use crate::partition::Decomposition;
use crate::sparse::{factorize, galerkin_product, BackendConfig, CsrMatrix, Factorization, SparseError};
use crate::timing::TimeAccumulator;

#[derive(Debug, Error)]
pub enum PrecondError {
    #[error("both levels disabled: the preconditioner would be empty")]
    EmptyPreconditioner,
    #[error("coarse level enabled but no coarse basis given")]
    MissingCoarseBasis,
    #[error("matrix has {matrix} rows, expected {expected}")]
    SizeMismatch { matrix: usize, expected: usize },
    #[error("local matrix of subdomain {subdomain} is singular: {source}")]
    SingularLocal {
        subdomain: usize,
        #[source]
        source: SparseError,
    },
    #[error("coarse matrix is singular: {source}")]
    SingularCoarse {
        #[source]
        source: SparseError,
    },
    #[error(transparent)]
    Sparse(#[from] SparseError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelFlags {
    pub first_level: bool,
    pub coarse: bool,
}

impl LevelFlags {
    pub const TWO_LEVEL: LevelFlags = LevelFlags { first_level: true, coarse: true };
    pub const ONE_LEVEL: LevelFlags = LevelFlags { first_level: true, coarse: false };
    pub const COARSE_ONLY: LevelFlags = LevelFlags { first_level: false, coarse: true };
}

/// Timing snapshot in seconds.
///
/// `local_solve` and `coarse_solve` are factorization plus all substitutions
/// so far; `setup_*` cover extraction, Galerkin product and factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecondTiming {
    pub setup_local: f64,
    pub setup_coarse: f64,
    pub local_factor: f64,
    pub coarse_factor: f64,
    pub apply_local: f64,
    pub apply_coarse: f64,
    pub applications: u64,
}

impl PrecondTiming {
    pub fn setup(&self) -> f64 {
        self.setup_local + self.setup_coarse
    }

    pub fn local_solve(&self) -> f64 {
        self.local_factor + self.apply_local
    }

    pub fn coarse_solve(&self) -> f64 {
        self.coarse_factor + self.apply_coarse
    }
}

struct CoarseLevel {
    phi: CsrMatrix,
    phi_t: CsrMatrix,
    factor: Factorization,
}

pub struct GdswPreconditioner {
    n: usize,
    flags: LevelFlags,
    restrictions: Vec<Vec<usize>>,
    local: Vec<Factorization>,
    coarse: Option<CoarseLevel>,
    setup_local: f64,
    setup_coarse: f64,
    local_factor: f64,
    apply_local: TimeAccumulator,
    apply_coarse: TimeAccumulator,
    applications: std::sync::atomic::AtomicU64,
}

fn setup_local_level(
    k: &CsrMatrix,
    d: &Decomposition,
    cfg: &BackendConfig,
) -> Result<(Vec<Factorization>, f64), PrecondError> {
    let start = Instant::now();
    let local = (0..d.n_subdomains())
        .into_par_iter()
        .map(|i| {
            let ki = k.principal_submatrix(d.overlapping(i))?;
            factorize(&ki, cfg).map_err(|source| PrecondError::SingularLocal { subdomain: i, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((local, start.elapsed().as_secs_f64()))
}

fn setup_coarse_level(k: &CsrMatrix, phi: &CsrMatrix, cfg: &BackendConfig) -> Result<CoarseLevel, PrecondError> {
    if phi.nrows() != k.nrows() {
        return Err(PrecondError::SizeMismatch { matrix: phi.nrows(), expected: k.nrows() });
    }
    let k0 = galerkin_product(phi, k)?;
    let factor = factorize(&k0, cfg).map_err(|source| PrecondError::SingularCoarse { source })?;
    Ok(CoarseLevel { phi: phi.clone(), phi_t: phi.transpose(), factor })
}

impl GdswPreconditioner {
    /// Factorizes every `Kᵢ = RᵢKRᵢᵀ` and `K₀ = ΦᵀKΦ` with the same backend.
    pub fn setup(
        k: &CsrMatrix,
        d: &Decomposition,
        basis: Option<&CoarseBasis>,
        cfg: &BackendConfig,
        flags: LevelFlags,
    ) -> Result<Self, PrecondError> {
        if !flags.first_level && !flags.coarse {
            return Err(PrecondError::EmptyPreconditioner);
        }
        if !k.is_square() || k.nrows() != d.n_dofs() {
            return Err(PrecondError::SizeMismatch { matrix: k.nrows(), expected: d.n_dofs() });
        }
        cfg.validate()?;
        let phi = match (flags.coarse, basis) {
            (true, None) => return Err(PrecondError::MissingCoarseBasis),
            (true, Some(b)) => Some(&b.phi),
            (false, _) => None,
        };

        let (local, coarse) = rayon::join(
            || flags.first_level.then(|| setup_local_level(k, d, cfg)).transpose(),
            || {
                phi.map(|p| {
                    let start = Instant::now();
                    setup_coarse_level(k, p, cfg).map(|c| (c, start.elapsed().as_secs_f64()))
                })
                .transpose()
            },
        );
        let (local, setup_local) = local?.unwrap_or_default();
        let (coarse, setup_coarse) = match coarse? {
            Some((c, t)) => (Some(c), t),
            None => (None, 0.0),
        };
        let local_factor = local.iter().map(|f| f.factor_seconds()).sum();
        Ok(GdswPreconditioner {
            n: k.nrows(),
            flags,
            restrictions: (0..d.n_subdomains()).map(|i| d.overlapping(i).to_vec()).collect(),
            local,
            coarse,
            setup_local,
            setup_coarse,
            local_factor,
            apply_local: TimeAccumulator::new(),
            apply_coarse: TimeAccumulator::new(),
            applications: Default::default(),
        })
    }

    pub fn flags(&self) -> LevelFlags {
        self.flags
    }

    pub fn n_subdomains(&self) -> usize {
        self.restrictions.len()
    }

    /// `max_i dim(K_i)`.
    pub fn max_local_size(&self) -> usize {
        self.restrictions.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn local_sizes(&self) -> Vec<usize> {
        self.restrictions.iter().map(Vec::len).collect()
    }

    /// `dim(K_0)`, zero when the coarse level is off.
    pub fn coarse_size(&self) -> usize {
        self.coarse.as_ref().map_or(0, |c| c.factor.dim())
    }

    pub fn backend(&self) -> crate::sparse::Backend {
        self.local
            .first()
            .map(|f| f.backend())
            .or_else(|| self.coarse.as_ref().map(|c| c.factor.backend()))
            .expect("at least one level is set up")
    }

    pub fn timing(&self) -> PrecondTiming {
        PrecondTiming {
            setup_local: self.setup_local,
            setup_coarse: self.setup_coarse,
            local_factor: self.local_factor,
            coarse_factor: self.coarse.as_ref().map_or(0.0, |c| c.factor.factor_seconds()),
            apply_local: self.apply_local.seconds(),
            apply_coarse: self.apply_coarse.seconds(),
            applications: self.applications.load(std::sync::atomic::Ordering::Relaxed),
        }
    }

    /// Clears the cumulative apply timers.
    pub fn reset_apply_timers(&self) {
        self.apply_local.reset();
        self.apply_coarse.reset();
        self.applications.store(0, std::sync::atomic::Ordering::Relaxed);
    }

    /// `Φ K₀⁻¹ Φᵀ r`.
    pub fn apply_coarse(&self, r: &[f64]) -> Result<Option<Vec<f64>>, SparseError> {
        let Some(c) = &self.coarse else { return Ok(None) };
        self.apply_coarse.time(|| {
            let mut rc = c.phi_t.spmv(r)?;
            c.factor.solve_in_place(&mut rc)?;
            c.phi.spmv(&rc).map(Some)
        })
    }

    /// `Σᵢ Rᵢᵀ Kᵢ⁻¹ Rᵢ r`, summed in subdomain order.
    pub fn apply_first_level(&self, r: &[f64]) -> Result<Option<Vec<f64>>, SparseError> {
        if !self.flags.first_level {
            return Ok(None);
        }
        self.apply_local.time(|| {
            let locals = self
                .restrictions
                .par_iter()
                .zip(&self.local)
                .map(|(idx, f)| {
                    let mut ri: Vec<f64> = idx.iter().map(|&g| r[g]).collect();
                    f.solve_in_place(&mut ri)?;
                    Ok(ri)
                })
                .collect::<Result<Vec<_>, SparseError>>()?;
            let mut z = vec![0.0; self.n];
            for (idx, zi) in self.restrictions.iter().zip(&locals) {
                for (&g, v) in idx.iter().zip(zi) {
                    z[g] += v;
                }
            }
            Ok(Some(z))
        })
    }
}

impl LinearOperator for GdswPreconditioner {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, r: &[f64], z: &mut [f64]) -> Result<(), SparseError> {
        check_len(self.n, r, z)?;
        self.applications.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let (coarse, local) = rayon::join(|| self.apply_coarse(r), || self.apply_first_level(r));
        match (coarse?, local?) {
            (Some(c), Some(l)) => {
                for ((zi, ci), li) in z.iter_mut().zip(&c).zip(&l) {
                    *zi = ci + li;
                }
            }
            (Some(v), None) | (None, Some(v)) => z.copy_from_slice(&v),
            (None, None) => unreachable!("setup rejects an empty preconditioner"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize, parts: usize) -> Decomposition {
        Decomposition::from_owner((0..n).map(|i| i * parts / n).collect(), parts).unwrap()
    }

    #[test]
    fn identity_with_one_subdomain_is_identity() {
        let k = CsrMatrix::identity(4);
        let d = path(4, 1);
        let m = GdswPreconditioner::setup(&k, &d, None, &BackendConfig::default(), LevelFlags::ONE_LEVEL).unwrap();
        let r = [1.0, 2.0, -3.0, 0.5];
        assert_eq!(m.apply(&r).unwrap(), r.to_vec());
        assert_eq!(m.coarse_size(), 0);
        assert_eq!(m.max_local_size(), 4);
    }

    #[test]
    fn both_levels_off_is_rejected() {
        let k = CsrMatrix::identity(3);
        let off = LevelFlags { first_level: false, coarse: false };
        let err = GdswPreconditioner::setup(&k, &path(3, 1), None, &BackendConfig::default(), off);
        assert!(matches!(err, Err(PrecondError::EmptyPreconditioner)));
        let err = GdswPreconditioner::setup(&k, &path(3, 1), None, &BackendConfig::default(), LevelFlags::TWO_LEVEL);
        assert!(matches!(err, Err(PrecondError::MissingCoarseBasis)));
    }

    #[test]
    fn singular_local_names_subdomain() {
        // second half is a floating Neumann block
        let k = CsrMatrix::from_dense(
            4,
            4,
            &[2.0, -1.0, 0.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0, 1.0],
        );
        let err = GdswPreconditioner::setup(&k, &path(4, 2), None, &BackendConfig::default(), LevelFlags::ONE_LEVEL);
        assert!(matches!(err, Err(PrecondError::SingularLocal { subdomain: 1, .. })));
        let phi = CsrMatrix::from_dense(4, 1, &[0.0, 0.0, 1.0, 1.0]);
        let b = CoarseBasis::from_phi(phi);
        let err =
            GdswPreconditioner::setup(&k, &path(4, 1), Some(&b), &BackendConfig::default(), LevelFlags::COARSE_ONLY);
        assert!(matches!(err, Err(PrecondError::SingularCoarse { .. })));
    }
}
