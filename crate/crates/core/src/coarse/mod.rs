//! GDSW coarse space: interface components, interface values and their
//! energy-minimizing extension.

mod basis;
mod interface;

use thiserror::Error;

use crate::sparse::SparseError;

pub use basis::{
    build_coarse_basis, coarse_operator, energy_minimizing_extension, interface_values, CoarseBasis, CoarseColumn,
    InterfaceValues, InteriorBlocks,
};
pub use interface::{identify_interface, ComponentKind, ComponentReport, Interface, InterfaceComponent, NodeMap};

#[derive(Debug, Error)]
pub enum CoarseError {
    #[error("size mismatch: matrix has {matrix} rows, decomposition has {dofs} dofs")]
    SizeMismatch { matrix: usize, dofs: usize },
    #[error("empty null space")]
    EmptyNullspace,
    #[error("null-space vector {vector} has length {found}, expected {expected}")]
    NullspaceLength { vector: usize, found: usize, expected: usize },
    #[error("interior and interface sets must partition the dofs: {0}")]
    InvalidSplit(String),
    #[error("interior block of subdomain {subdomain} is singular: {source}")]
    SingularInterior {
        subdomain: usize,
        #[source]
        source: SparseError,
    },
    #[error("interior block K_II is singular: {source}")]
    SingularGlobalInterior {
        #[source]
        source: SparseError,
    },
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
