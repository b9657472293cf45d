use std::collections::BTreeSet;

use super::TriangleMesh;
use crate::Vector3;

/// Default dihedral threshold for edge classification, in degrees.
pub const DEFAULT_EDGE_THRESHOLD_DEG: f64 = 30.0;

/// Vertices lying on a geometric edge of the mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeVertexSet {
    pub indices: BTreeSet<usize>,
    /// Threshold (radians) the set was computed with.
    pub dihedral_threshold: f64,
}

impl EdgeVertexSet {
    pub fn contains(&self, vertex: usize) -> bool {
        self.indices.contains(&vertex)
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Dense membership mask over `vertex_count` vertices.
    pub fn mask(&self, vertex_count: usize) -> Vec<bool> {
        let mut m = vec![false; vertex_count];
        for &i in &self.indices {
            if i < vertex_count {
                m[i] = true;
            }
        }
        m
    }
}

/// Marks vertex `i` as an edge vertex when some pair of faces incident to it
/// have unit face normals more than `tau_e` radians apart (strict).
/// Zero-area faces have no normal and are ignored.
pub fn compute_edge_vertices(mesh: &TriangleMesh, tau_e: f64) -> EdgeVertexSet {
    let face_normals: Vec<Option<Vector3>> = (0..mesh.face_count())
        .map(|f| mesh.face_normal_raw(f).try_normalize(0.0))
        .collect();
    let mut indices = BTreeSet::new();
    for (v, faces) in mesh.vertex_faces().iter().enumerate() {
        let normals: Vec<&Vector3> = faces.iter().filter_map(|&f| face_normals[f].as_ref()).collect();
        let is_edge = normals.iter().enumerate().any(|(i, a)| {
            normals[i + 1..]
                .iter()
                .any(|b| a.dot(b).clamp(-1.0, 1.0).acos() > tau_e)
        });
        if is_edge {
            indices.insert(v);
        }
    }
    EdgeVertexSet {
        indices,
        dihedral_threshold: tau_e,
    }
}
