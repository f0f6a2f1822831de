use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::partition::Decomposition;
use crate::sparse::{factorize, galerkin_product, write_matrix_market_file, BackendConfig, CsrMatrix};

use super::interface::{identify_interface, ComponentReport, Interface, InterfaceComponent, NodeMap};
use super::CoarseError;

/// Origin of a coarse basis column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseColumn {
    pub component: usize,
    pub null_vector: usize,
}

/// `Φ_Γ` with per-column provenance.
#[derive(Clone, Debug)]
pub struct InterfaceValues {
    pub phi_gamma: CsrMatrix,
    pub columns: Vec<CoarseColumn>,
    /// Columns removed because they vanished or were linearly dependent.
    pub dropped: usize,
}

// Cholesky of a Gram matrix pivoting in column order: a column is kept when
// its remaining diagonal exceeds 1e-12 times the largest diagonal.
fn independent_columns(gram: &[f64], m: usize) -> Vec<usize> {
    let mut diag: Vec<f64> = (0..m).map(|j| gram[j * m + j]).collect();
    let tol = 1e-12 * diag.iter().cloned().fold(0.0, f64::max);
    // l[i * m + s]: entry of row i in the s-th kept column
    let mut l = vec![0.0; m * m];
    let mut selected = Vec::new();
    for p in 0..m {
        if diag[p] <= tol {
            continue;
        }
        let step = selected.len();
        let piv = diag[p].sqrt();
        l[p * m + step] = piv;
        for i in p + 1..m {
            let mut v = gram[i * m + p];
            for q in 0..step {
                v -= l[i * m + q] * l[p * m + q];
            }
            let lik = v / piv;
            l[i * m + step] = lik;
            diag[i] -= lik * lik;
        }
        selected.push(p);
    }
    selected
}

/// Restricts each null-space vector to each component.
///
/// Columns that are identically zero on their component are dropped, and so
/// are columns linearly dependent on earlier null-space vectors restricted to
/// the same component.
pub fn interface_values(
    components: &[InterfaceComponent],
    nullspace: &[Vec<f64>],
    n_dofs: usize,
) -> Result<InterfaceValues, CoarseError> {
    if nullspace.is_empty() {
        return Err(CoarseError::EmptyNullspace);
    }
    for (j, v) in nullspace.iter().enumerate() {
        if v.len() != n_dofs {
            return Err(CoarseError::NullspaceLength { vector: j, found: v.len(), expected: n_dofs });
        }
    }
    let mut triplets = Vec::new();
    let mut columns = Vec::new();
    let mut dropped = 0;
    for (ci, comp) in components.iter().enumerate() {
        let candidates: Vec<usize> =
            (0..nullspace.len()).filter(|&j| comp.dofs.iter().any(|&g| nullspace[j][g] != 0.0)).collect();
        let m = candidates.len();
        let mut gram = vec![0.0; m * m];
        for a in 0..m {
            for b in 0..=a {
                let (va, vb) = (&nullspace[candidates[a]], &nullspace[candidates[b]]);
                let s: f64 = comp.dofs.iter().map(|&g| va[g] * vb[g]).sum();
                gram[a * m + b] = s;
                gram[b * m + a] = s;
            }
        }
        let keep = independent_columns(&gram, m);
        dropped += nullspace.len() - keep.len();
        for &a in &keep {
            let j = candidates[a];
            let col = columns.len();
            for &g in &comp.dofs {
                let v = nullspace[j][g];
                if v != 0.0 {
                    triplets.push((g, col, v));
                }
            }
            columns.push(CoarseColumn { component: ci, null_vector: j });
        }
    }
    let phi_gamma = CsrMatrix::from_triplets(n_dofs, columns.len(), &triplets)?;
    Ok(InterfaceValues { phi_gamma, columns, dropped })
}

/// How the interior block `K_II` is factorized.
#[derive(Clone, Copy, Debug)]
pub enum InteriorBlocks<'a> {
    /// One factorization of the whole `K_II`.
    Global(&'a [usize]),
    /// One factorization per subdomain interior; block `i` belongs to subdomain `i`.
    PerSubdomain(&'a [Vec<usize>]),
}

/// Builds `Φ` with `Φ_Γ` on the interface rows and `−K_II⁻¹K_IΓΦ_Γ` on the
/// interior rows.
pub fn energy_minimizing_extension(
    k: &CsrMatrix,
    interior: InteriorBlocks<'_>,
    interface: &[usize],
    phi_gamma: &CsrMatrix,
    cfg: &BackendConfig,
) -> Result<CsrMatrix, CoarseError> {
    let n = k.nrows();
    if !k.is_square() || phi_gamma.nrows() != n {
        return Err(CoarseError::SizeMismatch { matrix: k.nrows(), dofs: phi_gamma.nrows() });
    }
    let blocks: Vec<&[usize]> = match interior {
        InteriorBlocks::Global(i) => vec![i],
        InteriorBlocks::PerSubdomain(bs) => bs.iter().map(|b| b.as_slice()).collect(),
    };
    let mut seen = vec![false; n];
    for &g in blocks.iter().flat_map(|b| b.iter()).chain(interface) {
        if g >= n {
            return Err(CoarseError::InvalidSplit(format!("index {g} out of range")));
        }
        if seen[g] {
            return Err(CoarseError::InvalidSplit(format!("dof {g} listed twice")));
        }
        seen[g] = true;
    }
    if let Some(g) = seen.iter().position(|s| !s) {
        return Err(CoarseError::InvalidSplit(format!("dof {g} missing")));
    }

    let m = phi_gamma.ncols();
    let all_cols: Vec<usize> = (0..m).collect();
    let p_gamma = phi_gamma.extract_submatrix(interface, &all_cols)?;

    let blocks_out: Vec<Vec<(usize, usize, f64)>> = blocks
        .par_iter()
        .enumerate()
        .map(|(bi, block)| {
            let wrap = |source| match interior {
                InteriorBlocks::Global(_) => CoarseError::SingularGlobalInterior { source },
                InteriorBlocks::PerSubdomain(_) => CoarseError::SingularInterior { subdomain: bi, source },
            };
            if block.is_empty() {
                return Ok(Vec::new());
            }
            let kbb = k.principal_submatrix(block)?;
            let fact = factorize(&kbb, cfg).map_err(wrap)?;
            let rhs_sparse = k.extract_submatrix(block, interface)?.matmul(&p_gamma)?;
            let mut active: Vec<usize> = rhs_sparse.col_indices().to_vec();
            active.sort_unstable();
            active.dedup();
            if active.is_empty() {
                return Ok(Vec::new());
            }
            let nb = block.len();
            let mut slot = vec![usize::MAX; m];
            for (s, &c) in active.iter().enumerate() {
                slot[c] = s;
            }
            let mut rhs = vec![0.0; nb * active.len()];
            for (r, c, v) in rhs_sparse.iter() {
                rhs[slot[c] * nb + r] = -v;
            }
            fact.solve_multi_in_place(&mut rhs, active.len())?;
            let mut out = Vec::new();
            for (s, &c) in active.iter().enumerate() {
                for (r, &v) in rhs[s * nb..(s + 1) * nb].iter().enumerate() {
                    if v != 0.0 {
                        out.push((block[r], c, v));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_, CoarseError>>()?;

    let mut triplets: Vec<(usize, usize, f64)> = p_gamma.iter().map(|(r, c, v)| (interface[r], c, v)).collect();
    for b in blocks_out {
        triplets.extend(b);
    }
    Ok(CsrMatrix::from_triplets(n, m, &triplets)?)
}

/// Coarse basis `Φ` with its interface metadata.
#[derive(Clone, Debug)]
pub struct CoarseBasis {
    pub phi: CsrMatrix,
    pub columns: Vec<CoarseColumn>,
    pub interface: Interface,
    pub dropped_columns: usize,
}

impl CoarseBasis {
    /// Wraps an explicit basis matrix without interface metadata.
    pub fn from_phi(phi: CsrMatrix) -> Self {
        CoarseBasis {
            columns: Vec::new(),
            interface: Interface {
                interface_dofs: Vec::new(),
                interior_dofs: (0..phi.nrows()).collect(),
                components: Vec::new(),
            },
            phi,
            dropped_columns: 0,
        }
    }

    pub fn n_coarse(&self) -> usize {
        self.phi.ncols()
    }

    pub fn report(&self) -> ComponentReport {
        self.interface.report()
    }

    pub fn write_report_json(&self, path: impl AsRef<Path>) -> Result<(), CoarseError> {
        fs::write(path, serde_json::to_string_pretty(&self.report())?)?;
        Ok(())
    }

    pub fn write_phi_matrix_market(&self, path: impl AsRef<Path>) -> Result<(), CoarseError> {
        write_matrix_market_file(&self.phi, path)?;
        Ok(())
    }
}

fn interior_blocks_by_owner(k: &CsrMatrix, d: &Decomposition, interior: &[usize]) -> Option<Vec<Vec<usize>>> {
    let owner = d.owner();
    let mut is_interior = vec![false; d.n_dofs()];
    for &g in interior {
        is_interior[g] = true;
    }
    for (r, c, _) in k.iter() {
        if is_interior[r] && is_interior[c] && owner[r] != owner[c] {
            return None;
        }
    }
    let mut blocks = vec![Vec::new(); d.n_subdomains()];
    for &g in interior {
        blocks[owner[g]].push(g);
    }
    Some(blocks)
}

/// Interface detection, interface values and extension in one call.
///
/// The extension is factorized per subdomain interior unless interior dofs of
/// different owners are coupled, in which case one global `K_II` is used.
pub fn build_coarse_basis(
    k: &CsrMatrix,
    d: &Decomposition,
    nodes: NodeMap<'_>,
    spatial_dim: usize,
    nullspace: &[Vec<f64>],
    cfg: &BackendConfig,
) -> Result<CoarseBasis, CoarseError> {
    let interface = identify_interface(k, d, nodes, spatial_dim)?;
    let values = interface_values(&interface.components, nullspace, d.n_dofs())?;
    let phi = match interior_blocks_by_owner(k, d, &interface.interior_dofs) {
        Some(blocks) => energy_minimizing_extension(
            k,
            InteriorBlocks::PerSubdomain(&blocks),
            &interface.interface_dofs,
            &values.phi_gamma,
            cfg,
        )?,
        None => energy_minimizing_extension(
            k,
            InteriorBlocks::Global(&interface.interior_dofs),
            &interface.interface_dofs,
            &values.phi_gamma,
            cfg,
        )?,
    };
    Ok(CoarseBasis { phi, columns: values.columns, interface, dropped_columns: values.dropped })
}

/// `K_0 = ΦᵀKΦ`.
pub fn coarse_operator(basis: &CoarseBasis, k: &CsrMatrix) -> Result<CsrMatrix, CoarseError> {
    Ok(galerkin_product(&basis.phi, k)?)
}
