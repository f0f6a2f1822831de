use serde::{Deserialize, Serialize};

use super::ProblemError;

/// Uniform structured grid of `[0, cells·h]^dim` with lexicographic node numbering
/// (x fastest, then y, then z).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StructuredGrid {
    dim: usize,
    cells: Vec<usize>,
    h: f64,
}

impl StructuredGrid {
    pub fn new(cells: &[usize], h: f64) -> Result<Self, ProblemError> {
        let dim = cells.len();
        if !(1..=3).contains(&dim) {
            return Err(ProblemError::InvalidGrid(format!("dimension must be 1, 2 or 3, got {dim}")));
        }
        if cells.iter().any(|&c| c == 0) {
            return Err(ProblemError::InvalidGrid("every axis needs at least one cell".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(ProblemError::InvalidGrid(format!("element size must be positive, got {h}")));
        }
        Ok(Self { dim, cells: cells.to_vec(), h })
    }

    /// Grid of the unit interval/square/cube with `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Result<Self, ProblemError> {
        Self::new(&vec![n; dim], 1.0 / n.max(1) as f64)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Nodes per axis (`cells + 1`).
    pub fn nodes_per_axis(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c + 1).collect()
    }

    pub fn num_nodes(&self) -> usize {
        self.cells.iter().map(|c| c + 1).product()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// Integer coordinates of a node, padded with zeros to length 3.
    pub fn node_ijk(&self, node: usize) -> [usize; 3] {
        let mut ijk = [0usize; 3];
        let mut rest = node;
        for (axis, slot) in ijk.iter_mut().enumerate().take(self.dim) {
            let m = self.cells[axis] + 1;
            *slot = rest % m;
            rest /= m;
        }
        ijk
    }

    pub fn node_index(&self, ijk: [usize; 3]) -> usize {
        let mut idx = 0;
        for axis in (0..self.dim).rev() {
            idx = idx * (self.cells[axis] + 1) + ijk[axis];
        }
        idx
    }

    /// Physical coordinates of a node, padded with zeros to length 3.
    pub fn node_coords(&self, node: usize) -> [f64; 3] {
        let ijk = self.node_ijk(node);
        [ijk[0] as f64 * self.h, ijk[1] as f64 * self.h, ijk[2] as f64 * self.h]
    }

    /// Nodes of a cell in the local Q1 order: local node `a` sits at offset bit `d` of `a` along axis `d`.
    pub fn cell_nodes(&self, cell: usize) -> Vec<usize> {
        let mut cijk = [0usize; 3];
        let mut rest = cell;
        for (axis, slot) in cijk.iter_mut().enumerate().take(self.dim) {
            *slot = rest % self.cells[axis];
            rest /= self.cells[axis];
        }
        (0..1usize << self.dim)
            .map(|a| {
                let mut ijk = cijk;
                for (axis, v) in ijk.iter_mut().enumerate().take(self.dim) {
                    *v += (a >> axis) & 1;
                }
                self.node_index(ijk)
            })
            .collect()
    }

    pub fn is_boundary_node(&self, node: usize) -> bool {
        let ijk = self.node_ijk(node);
        (0..self.dim).any(|d| ijk[d] == 0 || ijk[d] == self.cells[d])
    }

    pub fn on_face(&self, node: usize, face: Face) -> bool {
        let ijk = self.node_ijk(node);
        face.axis < self.dim && ijk[face.axis] == if face.upper { self.cells[face.axis] } else { 0 }
    }
}

/// A boundary face of the box: `x_axis = 0` (`upper = false`) or `x_axis = max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
}

impl Face {
    pub const X_LOWER: Face = Face { axis: 0, upper: false };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invalid_grids() {
        assert!(StructuredGrid::new(&[], 1.0).is_err());
        assert!(StructuredGrid::new(&[1, 1, 1, 1], 1.0).is_err());
        assert!(StructuredGrid::new(&[2, 0], 1.0).is_err());
        assert!(StructuredGrid::new(&[2], -1.0).is_err());
    }

    #[test]
    fn numbering_roundtrip() {
        let g = StructuredGrid::new(&[3, 2, 4], 0.5).unwrap();
        assert_eq!(g.num_nodes(), 4 * 3 * 5);
        for n in 0..g.num_nodes() {
            assert_eq!(g.node_index(g.node_ijk(n)), n);
        }
        assert_eq!(g.node_coords(g.node_index([1, 2, 3])), [0.5, 1.0, 1.5]);
    }

    #[test]
    fn cell_nodes_order() {
        let g = StructuredGrid::new(&[2, 2], 1.0).unwrap();
        // cell 3 is the upper-right one: nodes (1,1),(2,1),(1,2),(2,2)
        assert_eq!(g.cell_nodes(3), vec![4, 5, 7, 8]);
    }
}
