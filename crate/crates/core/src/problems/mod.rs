//! Model problems on structured grids: Q1 Laplace in 1D/2D/3D and 3D linear
//! elasticity.
//!
//! Dirichlet conditions are homogeneous and imposed by symmetric elimination:
//! constrained rows and columns are removed, so `AssembledSystem::k` only
//! carries free dofs. Reduced dof `r` maps back to the full numbering through
//! `free_dofs[r]`; full dof `d` lives on node `d / dofs_per_node`, component
//! `d % dofs_per_node`.

mod grid;
pub mod q1;

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::{Face, StructuredGrid};

use crate::sparse::{write_matrix_market_file, CsrMatrix, SparseError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("null-space mode {mode:?} is not available for a problem with {dofs_per_node} dof(s) per node")]
    IncompatibleNullspace { mode: NullspaceMode, dofs_per_node: usize },
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    Laplace,
    Elasticity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryCondition {
    DirichletAll,
    NeumannAll,
    DirichletFaces(Vec<Face>),
}

impl BoundaryCondition {
    fn constrains(&self, grid: &StructuredGrid, node: usize) -> bool {
        match self {
            BoundaryCondition::DirichletAll => grid.is_boundary_node(node),
            BoundaryCondition::NeumannAll => false,
            BoundaryCondition::DirichletFaces(faces) => faces.iter().any(|&f| grid.on_face(node, f)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NullspaceMode {
    OneDimensional,
    Translations,
    TranslationsRotations,
}

impl FromStr for NullspaceMode {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "one-dimensional" | "1d" | "constants" => Ok(Self::OneDimensional),
            "translations" => Ok(Self::Translations),
            "translations-rotations" | "rigid-body" => Ok(Self::TranslationsRotations),
            other => Err(ProblemError::InvalidParameter(format!("unknown null-space mode `{other}`"))),
        }
    }
}

/// Material constants for linear elasticity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub young: f64,
    pub poisson: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self { young: 210.0, poisson: 0.3 }
    }
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub kind: ProblemKind,
    pub grid: StructuredGrid,
    /// Stiffness matrix on the free dofs.
    pub k: CsrMatrix,
    /// Right-hand side on the free dofs.
    pub f: Vec<f64>,
    /// Constrained dofs, full numbering.
    pub dirichlet_dofs: Vec<usize>,
    /// Free dofs, full numbering; reduced dof `r` is `free_dofs[r]`.
    pub free_dofs: Vec<usize>,
    /// Kernel of the Neumann operator on the free dofs; empty when Dirichlet data pins it.
    pub nullspace: Vec<Vec<f64>>,
    pub dofs_per_node: usize,
    /// Grid node of each reduced dof.
    pub node_of_dof: Vec<usize>,
}

impl AssembledSystem {
    pub fn num_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    /// Displacement component (0 for scalar problems) of each reduced dof.
    pub fn component_of_dof(&self, dof: usize) -> usize {
        self.free_dofs[dof] % self.dofs_per_node
    }

    pub fn dof_coords(&self, dof: usize) -> [f64; 3] {
        self.grid.node_coords(self.node_of_dof[dof])
    }

    /// Writes `<stem>.mtx` with `K` and `<stem>.json` with dof maps and coordinates.
    pub fn export(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(), ProblemError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        write_matrix_market_file(&self.k, dir.join(format!("{stem}.mtx")))?;
        let sidecar = SystemSidecar::from(self);
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }
}

/// Metadata written next to an exported matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSidecar {
    pub kind: ProblemKind,
    pub dim: usize,
    pub cells: Vec<usize>,
    pub h: f64,
    pub dofs_per_node: usize,
    pub free_dofs: Vec<usize>,
    pub dirichlet_dofs: Vec<usize>,
    pub node_of_dof: Vec<usize>,
    pub coordinates: Vec<[f64; 3]>,
}

impl From<&AssembledSystem> for SystemSidecar {
    fn from(s: &AssembledSystem) -> Self {
        Self {
            kind: s.kind,
            dim: s.grid.dim(),
            cells: s.grid.cells().to_vec(),
            h: s.grid.h(),
            dofs_per_node: s.dofs_per_node,
            free_dofs: s.free_dofs.clone(),
            dirichlet_dofs: s.dirichlet_dofs.clone(),
            node_of_dof: s.node_of_dof.clone(),
            coordinates: (0..s.num_dofs()).map(|d| s.dof_coords(d)).collect(),
        }
    }
}

/// Assembles the global stiffness from a per-cell element matrix and eliminates constrained dofs.
fn assemble(
    kind: ProblemKind,
    grid: &StructuredGrid,
    dofs_per_node: usize,
    element: &[f64],
    bc: &BoundaryCondition,
) -> Result<AssembledSystem, ProblemError> {
    let nloc = (1usize << grid.dim()) * dofs_per_node;
    let ndofs = grid.num_nodes() * dofs_per_node;
    let mut triplets = Vec::with_capacity(grid.num_cells() * nloc * nloc);
    for cell in 0..grid.num_cells() {
        let nodes = grid.cell_nodes(cell);
        let dofs: Vec<usize> =
            nodes.iter().flat_map(|&n| (0..dofs_per_node).map(move |c| n * dofs_per_node + c)).collect();
        for (p, &gp) in dofs.iter().enumerate() {
            for (q, &gq) in dofs.iter().enumerate() {
                triplets.push((gp, gq, element[p * nloc + q]));
            }
        }
    }
    let full = CsrMatrix::from_triplets(ndofs, ndofs, &triplets)?;

    let (mut free_dofs, mut dirichlet_dofs) = (Vec::new(), Vec::new());
    for d in 0..ndofs {
        if bc.constrains(grid, d / dofs_per_node) {
            dirichlet_dofs.push(d);
        } else {
            free_dofs.push(d);
        }
    }
    let k = full.principal_submatrix(&free_dofs)?;
    let node_of_dof: Vec<usize> = free_dofs.iter().map(|d| d / dofs_per_node).collect();
    let mut system = AssembledSystem {
        kind,
        grid: grid.clone(),
        k,
        f: vec![1.0; free_dofs.len()],
        dirichlet_dofs,
        free_dofs,
        nullspace: Vec::new(),
        dofs_per_node,
        node_of_dof,
    };
    if *bc == BoundaryCondition::NeumannAll {
        system.nullspace = match kind {
            ProblemKind::Laplace => nullspace_basis(&system, NullspaceMode::OneDimensional)?,
            ProblemKind::Elasticity => nullspace_basis(&system, NullspaceMode::TranslationsRotations)?,
        };
    }
    Ok(system)
}

/// Q1 Laplace stiffness matrix with a right-hand side of ones.
pub fn assemble_laplace(grid: &StructuredGrid, bc: &BoundaryCondition) -> Result<AssembledSystem, ProblemError> {
    let ke = q1::laplace_element(grid.dim(), grid.h());
    assemble(ProblemKind::Laplace, grid, 1, &ke, bc)
}

/// Q1 linear elasticity stiffness (3 dofs per node) with a right-hand side of ones.
pub fn assemble_elasticity3d(
    grid: &StructuredGrid,
    material: Material,
    bc: &BoundaryCondition,
) -> Result<AssembledSystem, ProblemError> {
    if grid.dim() != 3 {
        return Err(ProblemError::InvalidParameter(format!(
            "elasticity needs a 3D grid, got dimension {}",
            grid.dim()
        )));
    }
    if !(material.young > 0.0) {
        return Err(ProblemError::InvalidParameter(format!(
            "Young's modulus must be positive, got {}",
            material.young
        )));
    }
    if !(material.poisson > 0.0 && material.poisson < 0.5) {
        return Err(ProblemError::InvalidParameter(format!(
            "Poisson's ratio must lie in (0, 0.5), got {}",
            material.poisson
        )));
    }
    let (lambda, mu) = q1::lame(material.young, material.poisson);
    let ke = q1::elasticity_element(grid.h(), lambda, mu);
    assemble(ProblemKind::Elasticity, grid, 3, &ke, bc)
}

/// Null-space candidates on the free dofs built from node coordinates.
///
/// `OneDimensional` is the all-ones vector for every problem. `Translations`
/// gives one indicator per displacement component (just the constants for a
/// scalar problem). `TranslationsRotations` adds the three linearized
/// rotations about the origin and needs 3 dofs per node.
pub fn nullspace_basis(system: &AssembledSystem, mode: NullspaceMode) -> Result<Vec<Vec<f64>>, ProblemError> {
    let n = system.num_dofs();
    let dpn = system.dofs_per_node;
    match mode {
        NullspaceMode::OneDimensional => Ok(vec![vec![1.0; n]]),
        NullspaceMode::Translations => Ok((0..dpn)
            .map(|c| (0..n).map(|d| if system.component_of_dof(d) == c { 1.0 } else { 0.0 }).collect())
            .collect()),
        NullspaceMode::TranslationsRotations => {
            if dpn != 3 {
                return Err(ProblemError::IncompatibleNullspace { mode, dofs_per_node: dpn });
            }
            let mut basis = nullspace_basis(system, NullspaceMode::Translations)?;
            // (-y, x, 0), (0, -z, y), (z, 0, -x)
            let rotations: [fn([f64; 3]) -> [f64; 3]; 3] =
                [|p| [-p[1], p[0], 0.0], |p| [0.0, -p[2], p[1]], |p| [p[2], 0.0, -p[0]]];
            for rot in rotations {
                basis.push((0..n).map(|d| rot(system.dof_coords(d))[system.component_of_dof(d)]).collect());
            }
            Ok(basis)
        }
    }
}
