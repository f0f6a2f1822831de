//! Algebraic interface detection and classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::partition::Decomposition;
use crate::sparse::CsrMatrix;

use super::CoarseError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComponentKind {
    Vertex,
    Edge,
    Face,
}

/// Interface dofs that see exactly the same set of subdomains.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterfaceComponent {
    pub kind: ComponentKind,
    pub dofs: Vec<usize>,
    pub adjacent_subdomains: Vec<usize>,
    /// Number of mesh nodes in the component.
    pub nodes: usize,
}

/// Interface `Γ`, its complement `I` and the component partition of `Γ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interface {
    pub interface_dofs: Vec<usize>,
    pub interior_dofs: Vec<usize>,
    pub components: Vec<InterfaceComponent>,
}

/// Grouping of dofs into mesh nodes; dofs of one node are classified together.
#[derive(Clone, Copy, Debug)]
pub enum NodeMap<'a> {
    /// Every dof is its own node.
    Scalar,
    /// `node_of_dof[d]` is the node carrying dof `d`.
    Nodes(&'a [usize]),
}

fn classify(n_adjacent: usize, n_nodes: usize, spatial_dim: usize) -> ComponentKind {
    if n_nodes == 1 {
        return ComponentKind::Vertex;
    }
    match (spatial_dim, n_adjacent) {
        (2, 2) => ComponentKind::Edge,
        (3, 2) => ComponentKind::Face,
        (3, 3) | (3, 4) => ComponentKind::Edge,
        _ => ComponentKind::Vertex,
    }
}

/// Finds the interface of a nonoverlapping decomposition from the matrix graph.
///
/// A node is on the interface iff the owners of the node and of its graph
/// neighbors are not all the same. Nodes are grouped into components by their
/// adjacent-subdomain set. A component of a single node is a vertex; otherwise
/// the kind follows from the number of adjacent subdomains and `spatial_dim`
/// (two subdomains: edge in 2D, face in 3D; three or four in 3D: edge; more:
/// vertex).
pub fn identify_interface(
    k: &CsrMatrix,
    d: &Decomposition,
    nodes: NodeMap<'_>,
    spatial_dim: usize,
) -> Result<Interface, CoarseError> {
    let n = d.n_dofs();
    if !k.is_square() || k.nrows() != n {
        return Err(CoarseError::SizeMismatch { matrix: k.nrows(), dofs: n });
    }
    // compact node ids in order of first appearance
    let mut node_id = vec![0usize; n];
    let mut n_nodes = 0;
    match nodes {
        NodeMap::Scalar => {
            for (dof, id) in node_id.iter_mut().enumerate() {
                *id = dof;
            }
            n_nodes = n;
        }
        NodeMap::Nodes(map) => {
            if map.len() != n {
                return Err(CoarseError::SizeMismatch { matrix: map.len(), dofs: n });
            }
            let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
            for (dof, &node) in map.iter().enumerate() {
                let next = seen.len();
                node_id[dof] = *seen.entry(node).or_insert(next);
            }
            n_nodes = n_nodes.max(seen.len());
        }
    }

    let owner = d.owner();
    let mut adj_subs: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for dof in 0..n {
        adj_subs[node_id[dof]].push(owner[dof]);
    }
    for (r, c, _) in k.iter() {
        adj_subs[node_id[r]].push(owner[c]);
        adj_subs[node_id[c]].push(owner[r]);
    }
    for s in &mut adj_subs {
        s.sort_unstable();
        s.dedup();
    }

    let mut dofs_of_node: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for dof in 0..n {
        dofs_of_node[node_id[dof]].push(dof);
    }

    let mut classes: BTreeMap<&[usize], Vec<usize>> = BTreeMap::new();
    for (node, subs) in adj_subs.iter().enumerate() {
        if subs.len() >= 2 {
            classes.entry(subs.as_slice()).or_default().push(node);
        }
    }
    let mut components: Vec<InterfaceComponent> = classes
        .into_iter()
        .map(|(subs, class_nodes)| {
            let mut dofs: Vec<usize> = class_nodes.iter().flat_map(|&nd| dofs_of_node[nd].iter().copied()).collect();
            dofs.sort_unstable();
            InterfaceComponent {
                kind: classify(subs.len(), class_nodes.len(), spatial_dim),
                dofs,
                adjacent_subdomains: subs.to_vec(),
                nodes: class_nodes.len(),
            }
        })
        .collect();
    components.sort_by_key(|c| c.dofs[0]);

    let mut on_interface = vec![false; n];
    for c in &components {
        for &g in &c.dofs {
            on_interface[g] = true;
        }
    }
    let interface_dofs = (0..n).filter(|&g| on_interface[g]).collect();
    let interior_dofs = (0..n).filter(|&g| !on_interface[g]).collect();
    Ok(Interface { interface_dofs, interior_dofs, components })
}

/// Counts and sizes of interface components by kind.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComponentReport {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub interface_dofs: usize,
    pub interior_dofs: usize,
    pub component_sizes: Vec<usize>,
}

impl Interface {
    pub fn report(&self) -> ComponentReport {
        let count = |k: ComponentKind| self.components.iter().filter(|c| c.kind == k).count();
        ComponentReport {
            vertices: count(ComponentKind::Vertex),
            edges: count(ComponentKind::Edge),
            faces: count(ComponentKind::Face),
            interface_dofs: self.interface_dofs.len(),
            interior_dofs: self.interior_dofs.len(),
            component_sizes: self.components.iter().map(|c| c.dofs.len()).collect(),
        }
    }
}
