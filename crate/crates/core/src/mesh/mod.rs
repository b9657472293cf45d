//! Triangle meshes: construction, normals, validation, edge vertices and
//! visibility.

mod edges;
mod io;
pub mod primitives;
mod visibility;

use std::collections::HashMap;

use nalgebra::Isometry3;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::{Point3, Vector3};

pub use edges::{compute_edge_vertices, EdgeVertexSet, DEFAULT_EDGE_THRESHOLD_DEG};
pub use io::{load_mesh, save_obj, save_ply_ascii, save_ply_binary};
pub use visibility::{visible_vertices, VisibilityIndex};


/// An immutable triangle mesh with one unit normal per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vector3>,
    normals_from_source: bool,
}

/// Summary of structural problems found in a mesh. Serialized as JSON by the
/// CLI; nothing in here prevents the mesh from being used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MeshValidationReport {
    pub vertex_count: usize,
    pub face_count: usize,
    pub normals_from_source: bool,
    pub degenerate_faces: usize,
    pub unreferenced_vertices: usize,
    /// Interior edges whose two faces traverse the edge in the same direction.
    pub inconsistent_winding_edges: usize,
    pub boundary_edges: usize,
    pub non_manifold_edges: usize,
    pub consistent_winding: bool,
}

impl TriangleMesh {
    /// Builds a mesh, computing area-weighted vertex normals.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        Self::build(vertices, faces, None)
    }

    /// Builds a mesh with caller-supplied vertex normals. Normals are
    /// normalized; zero-length entries are replaced by area-weighted normals.
    pub fn with_normals(
        vertices: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        normals: Vec<Vector3>,
    ) -> Result<Self> {
        Self::build(vertices, faces, Some(normals))
    }

    fn build(
        vertices: Vec<Point3>,
        faces: Vec<[usize; 3]>,
        normals: Option<Vec<Vector3>>,
    ) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(p) = vertices.iter().find(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {p}")));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references vertex {bad} but mesh has {n} vertices"
                )));
            }
        }
        let computed = area_weighted_normals(&vertices, &faces);
        let (normals, from_source) = match normals {
            Some(given) => {
                if given.len() != n {
                    return Err(Error::InvalidMesh(format!(
                        "{} normals for {n} vertices",
                        given.len()
                    )));
                }
                let merged = given
                    .iter()
                    .zip(&computed)
                    .map(|(g, c)| match g.try_normalize(f64::EPSILON) {
                        Some(u) if u.iter().all(|x| x.is_finite()) => u,
                        _ => *c,
                    })
                    .collect();
                (merged, true)
            }
            None => (computed, false),
        };
        Ok(Self {
            vertices,
            faces,
            normals,
            normals_from_source: from_source,
        })
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn vertex_normals(&self) -> &[Vector3] {
        &self.normals
    }

    pub fn normals_from_source(&self) -> bool {
        self.normals_from_source
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Unnormalized face normal (cross product of two edges, length = 2·area).
    pub fn face_normal_raw(&self, face: usize) -> Vector3 {
        let [a, b, c] = self.faces[face];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (pb - pa).cross(&(pc - pa))
    }

    /// Axis-aligned bounding box as (min, max).
    pub fn bounding_box(&self) -> (Point3, Point3) {
        let mut lo = Point3::from([f64::INFINITY; 3]);
        let mut hi = Point3::from([f64::NEG_INFINITY; 3]);
        for p in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        (lo, hi)
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Applies a rigid transform to positions and normals.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| iso * p).collect(),
            faces: self.faces.clone(),
            normals: self.normals.iter().map(|n| iso * n).collect(),
            normals_from_source: self.normals_from_source,
        }
    }

    pub fn translated(&self, offset: &Vector3) -> Self {
        self.transformed(&Isometry3::translation(offset.x, offset.y, offset.z))
    }

    /// Uniformly scales vertex positions; normals are unchanged.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p * factor).collect(),
            ..self.clone()
        }
    }

    /// Per-vertex list of incident faces.
    pub(crate) fn vertex_faces(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for &v in f {
                if !adj[v].contains(&fi) {
                    adj[v].push(fi);
                }
            }
        }
        adj
    }

    pub fn validate(&self) -> MeshValidationReport {
        let degenerate_faces = (0..self.faces.len())
            .filter(|&f| {
                let [a, b, c] = self.faces[f];
                a == b || b == c || a == c || self.face_normal_raw(f).norm_squared() == 0.0
            })
            .count();
        let mut referenced = vec![false; self.vertices.len()];
        for f in &self.faces {
            for &v in f {
                referenced[v] = true;
            }
        }
        let unreferenced_vertices = referenced.iter().filter(|r| !**r).count();

        // undirected edge -> (forward count, backward count)
        let mut edges: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        for f in &self.faces {
            for i in 0..3 {
                let (a, b) = (f[i], f[(i + 1) % 3]);
                if a == b {
                    continue;
                }
                let e = edges.entry((a.min(b), a.max(b))).or_default();
                if a < b {
                    e.0 += 1;
                } else {
                    e.1 += 1;
                }
            }
        }
        let mut boundary_edges = 0;
        let mut non_manifold_edges = 0;
        let mut inconsistent_winding_edges = 0;
        for &(fwd, bwd) in edges.values() {
            match fwd + bwd {
                1 => boundary_edges += 1,
                2 => {
                    if fwd != 1 {
                        inconsistent_winding_edges += 1;
                    }
                }
                _ => non_manifold_edges += 1,
            }
        }
        MeshValidationReport {
            vertex_count: self.vertices.len(),
            face_count: self.faces.len(),
            normals_from_source: self.normals_from_source,
            degenerate_faces,
            unreferenced_vertices,
            inconsistent_winding_edges,
            boundary_edges,
            non_manifold_edges,
            consistent_winding: inconsistent_winding_edges == 0,
        }
    }
}

/// Area-weighted vertex normals. Vertices with no usable adjacent face get
/// +z so that every normal is unit length; `validate` reports such vertices.
fn area_weighted_normals(vertices: &[Point3], faces: &[[usize; 3]]) -> Vec<Vector3> {
    let mut acc = vec![Vector3::zeros(); vertices.len()];
    for f in faces {
        let [a, b, c] = *f;
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        for &v in f {
            acc[v] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize(0.0).unwrap_or_else(Vector3::z))
        .collect()
}
