//! Nonoverlapping decompositions and algebraic overlap growth.
//!
//! Ownership is assigned per node, so every dof of a node lands in the same
//! subdomain. Overlaps are grown through the symmetrized matrix graph: one
//! layer adds every dof coupled to the current set.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::{AssembledSystem, StructuredGrid};
use crate::sparse::{CsrMatrix, SparseError};

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("{parts} parts do not divide {cells} cells along axis {axis}")]
    Indivisible { axis: usize, cells: usize, parts: usize },
    #[error("expected {expected} part counts, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix has {matrix} rows but the decomposition covers {dofs} dofs")]
    SizeMismatch { matrix: usize, dofs: usize },
    #[error("subdomain {0} owns no dofs")]
    EmptySubdomain(usize),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Ownership map plus overlapping index sets, one per subdomain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    n_subdomains: usize,
    owner: Vec<usize>,
    overlapping: Vec<Vec<usize>>,
    overlap_layers: usize,
}

/// The restriction `R_i`: global indices of overlapping subdomain `i`, sorted.
#[derive(Clone, Copy, Debug)]
pub struct RestrictionOp<'a> {
    pub subdomain: usize,
    pub indices: &'a [usize],
}

impl<'a> RestrictionOp<'a> {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `R_i x`
    pub fn restrict(&self, x: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&g| x[g]).collect()
    }

    /// `y += R_iᵀ x_local`
    pub fn prolong_add(&self, local: &[f64], y: &mut [f64]) {
        for (&g, &v) in self.indices.iter().zip(local) {
            y[g] += v;
        }
    }
}

impl Decomposition {
    /// Builds a nonoverlapping decomposition from an owner array.
    pub fn from_owner(owner: Vec<usize>, n_subdomains: usize) -> Result<Self, PartitionError> {
        let mut overlapping = vec![Vec::new(); n_subdomains];
        for (dof, &o) in owner.iter().enumerate() {
            if o >= n_subdomains {
                return Err(SparseError::IndexOutOfRange { index: o, bound: n_subdomains }.into());
            }
            overlapping[o].push(dof);
        }
        if let Some(empty) = overlapping.iter().position(Vec::is_empty) {
            return Err(PartitionError::EmptySubdomain(empty));
        }
        Ok(Self { n_subdomains, owner, overlapping, overlap_layers: 0 })
    }

    pub fn n_subdomains(&self) -> usize {
        self.n_subdomains
    }

    pub fn n_dofs(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self) -> &[usize] {
        &self.owner
    }

    pub fn overlap_layers(&self) -> usize {
        self.overlap_layers
    }

    pub fn overlapping(&self, i: usize) -> &[usize] {
        &self.overlapping[i]
    }

    pub fn owned(&self, i: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&d| self.owner[d] == i).collect()
    }

    pub fn restriction(&self, i: usize) -> RestrictionOp<'_> {
        RestrictionOp { subdomain: i, indices: &self.overlapping[i] }
    }

    pub fn restrictions(&self) -> impl Iterator<Item = RestrictionOp<'_>> {
        (0..self.n_subdomains).map(move |i| self.restriction(i))
    }

    pub fn max_overlapping_size(&self) -> usize {
        self.overlapping.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Restricts a decomposition of the full dof set to a kept subset, renumbering
    /// kept dof `kept[r]` to `r`. Overlaps are reset.
    pub fn restrict_to(&self, kept: &[usize]) -> Result<Self, PartitionError> {
        let owner = kept.iter().map(|&d| self.owner[d]).collect();
        Self::from_owner(owner, self.n_subdomains)
    }

    pub fn to_json(&self) -> Result<String, PartitionError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), PartitionError> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Splits a structured grid into equal boxes of cells.
///
/// A node on a box boundary belongs to the lowest-id adjacent box. Box ids are
/// lexicographic in the box coordinates with x fastest.
pub fn partition_structured(
    grid: &StructuredGrid,
    parts_per_axis: &[usize],
    dofs_per_node: usize,
) -> Result<Decomposition, PartitionError> {
    let dim = grid.dim();
    if parts_per_axis.len() != dim {
        return Err(PartitionError::DimensionMismatch { expected: dim, found: parts_per_axis.len() });
    }
    let cells = grid.cells();
    for (axis, (&c, &p)) in cells.iter().zip(parts_per_axis).enumerate() {
        if p == 0 || c % p != 0 {
            return Err(PartitionError::Indivisible { axis, cells: c, parts: p });
        }
    }
    let n_subdomains: usize = parts_per_axis.iter().product();
    let mut owner = Vec::with_capacity(grid.num_nodes() * dofs_per_node);
    for node in 0..grid.num_nodes() {
        let ijk = grid.node_ijk(node);
        let mut id = 0;
        for axis in (0..dim).rev() {
            let per_box = cells[axis] / parts_per_axis[axis];
            let b = if ijk[axis] == 0 { 0 } else { (ijk[axis] - 1) / per_box };
            id = id * parts_per_axis[axis] + b.min(parts_per_axis[axis] - 1);
        }
        owner.extend(std::iter::repeat_n(id, dofs_per_node));
    }
    Decomposition::from_owner(owner, n_subdomains)
}

/// Structured partition of an assembled system, restricted to its free dofs.
pub fn partition_system(system: &AssembledSystem, parts_per_axis: &[usize]) -> Result<Decomposition, PartitionError> {
    partition_structured(&system.grid, parts_per_axis, system.dofs_per_node)?.restrict_to(&system.free_dofs)
}

/// Grows every overlapping set by `layers` rings of matrix-graph neighbors.
pub fn extend_overlap(k: &CsrMatrix, d: &Decomposition, layers: usize) -> Result<Decomposition, PartitionError> {
    if !k.is_square() || k.nrows() != d.n_dofs() {
        return Err(PartitionError::SizeMismatch { matrix: k.nrows(), dofs: d.n_dofs() });
    }
    if layers == 0 {
        return Ok(d.clone());
    }
    let adj = k.symmetric_adjacency();
    let n = k.nrows();
    let overlapping = d
        .overlapping
        .par_iter()
        .map(|set| {
            let mut inside = vec![false; n];
            let mut members = set.clone();
            for &g in set {
                inside[g] = true;
            }
            let mut frontier = set.clone();
            for _ in 0..layers {
                let mut next = Vec::new();
                for &g in &frontier {
                    for &nb in &adj[g] {
                        if !inside[nb] {
                            inside[nb] = true;
                            next.push(nb);
                        }
                    }
                }
                if next.is_empty() {
                    break;
                }
                members.extend_from_slice(&next);
                frontier = next;
            }
            members.sort_unstable();
            members
        })
        .collect();
    Ok(Decomposition {
        n_subdomains: d.n_subdomains,
        owner: d.owner.clone(),
        overlapping,
        overlap_layers: d.overlap_layers + layers,
    })
}

/// `K_i = R_i K R_iᵀ`
pub fn local_matrix(k: &CsrMatrix, r: &RestrictionOp<'_>) -> Result<CsrMatrix, PartitionError> {
    Ok(k.principal_submatrix(r.indices)?)
}
