//! Vertex visibility by ray casting against the mesh's own triangles.
//!
//! A vertex is visible from a sensor when the segment from the sensor to the
//! vertex, pulled back from the vertex by `1e-6 · bbox diagonal`, crosses no
//! triangle that is not incident to that vertex. Triangle hits are inclusive
//! of triangle edges so rays through shared edges are never missed.

use std::collections::BTreeSet;

use super::TriangleMesh;
use crate::{Point3, Vector3};

const SHORTENING_FACTOR: f64 = 1e-6;
const LEAF_SIZE: usize = 4;
const BARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3,
    max: Point3,
}

impl Aabb {
    fn empty() -> Self {
        Self {
            min: Point3::from([f64::INFINITY; 3]),
            max: Point3::from([f64::NEG_INFINITY; 3]),
        }
    }

    fn grow(&mut self, p: &Point3) {
        for i in 0..3 {
            self.min[i] = self.min[i].min(p[i]);
            self.max[i] = self.max[i].max(p[i]);
        }
    }

    fn merge(&mut self, o: &Aabb) {
        self.grow(&o.min);
        self.grow(&o.max);
    }

    /// Slab test for the parametric segment `origin + t·dir`, t in [0, t_max].
    fn hit_segment(&self, origin: &Point3, inv_dir: &Vector3, t_max: f64) -> bool {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let mut a = (self.min[i] - origin[i]) * inv_dir[i];
            let mut b = (self.max[i] - origin[i]) * inv_dir[i];
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            // NaN from 0·inf means the ray lies in the slab plane; keep going
            if a.is_nan() || b.is_nan() {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return false;
                }
                continue;
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Precomputed ray-casting acceleration structure for one mesh. Cheap to
/// share between threads; queries take `&self`.
#[derive(Debug, Clone)]
pub struct VisibilityIndex<'a> {
    mesh: &'a TriangleMesh,
    nodes: Vec<Node>,
    order: Vec<usize>,
    epsilon: f64,
}

impl<'a> VisibilityIndex<'a> {
    pub fn new(mesh: &'a TriangleMesh) -> Self {
        let mut order: Vec<usize> = (0..mesh.face_count()).collect();
        let boxes: Vec<Aabb> = mesh
            .faces()
            .iter()
            .map(|f| {
                let mut b = Aabb::empty();
                for &v in f {
                    b.grow(&mesh.vertices()[v]);
                }
                b
            })
            .collect();
        let centroids: Vec<Point3> = boxes.iter().map(|b| nalgebra::center(&b.min, &b.max)).collect();
        let mut nodes = Vec::new();
        build(&mut nodes, &mut order, 0, mesh.face_count(), &boxes, &centroids);
        Self {
            mesh,
            nodes,
            order,
            epsilon: SHORTENING_FACTOR * mesh.bounding_box_diagonal(),
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    /// Is `vertex` visible from `sensor`?
    pub fn is_visible(&self, sensor: &Point3, vertex: usize) -> bool {
        let target = self.mesh.vertices()[vertex];
        let delta = target - sensor;
        let len = delta.norm();
        if len <= self.epsilon {
            return true;
        }
        let dir = delta / len;
        let t_max = len - self.epsilon;
        let inv = dir.map(|d| 1.0 / d);
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if !node.bounds().hit_segment(sensor, &inv, t_max) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.order[start..end] {
                        let face = self.mesh.faces()[f];
                        if face.contains(&vertex) {
                            continue;
                        }
                        if segment_hits_triangle(sensor, &dir, t_max, self.mesh, face) {
                            return false;
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        true
    }

    /// Sorted indices of all vertices visible from `sensor`.
    pub fn visible_vertices(&self, sensor: &Point3) -> Vec<usize> {
        (0..self.mesh.vertex_count())
            .filter(|&v| self.is_visible(sensor, v))
            .collect()
    }
}

fn build(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    boxes: &[Aabb],
    centroids: &[Point3],
) -> usize {
    let mut bounds = Aabb::empty();
    for &f in &order[start..end] {
        bounds.merge(&boxes[f]);
    }
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let mut cb = Aabb::empty();
    for &f in &order[start..end] {
        cb.grow(&centroids[f]);
    }
    let ext = cb.max - cb.min;
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis]).then(a.cmp(&b))
    });
    // placeholder, patched once children exist
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(nodes, order, start, mid, boxes, centroids);
    let right = build(nodes, order, mid, end, boxes, centroids);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}

/// Möller–Trumbore intersection of the segment `origin + t·dir`,
/// t in [0, t_max], with a triangle. Edges count as hits; rays parallel to
/// the triangle plane do not.
fn segment_hits_triangle(
    origin: &Point3,
    dir: &Vector3,
    t_max: f64,
    mesh: &TriangleMesh,
    face: [usize; 3],
) -> bool {
    let v = mesh.vertices();
    let (p0, p1, p2) = (v[face[0]], v[face[1]], v[face[2]]);
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let scale = e1.norm() * e2.norm();
    if det.abs() <= 1e-14 * scale {
        return false;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - p0;
    let u = tvec.dot(&pvec) * inv_det;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return false;
    }
    let qvec = tvec.cross(&e1);
    let w = dir.dot(&qvec) * inv_det;
    if w < -BARY_EPS || u + w > 1.0 + BARY_EPS {
        return false;
    }
    let t = e2.dot(&qvec) * inv_det;
    (0.0..=t_max).contains(&t)
}

/// Sorted set of vertex indices visible from `sensor`. Builds a throwaway
/// [`VisibilityIndex`]; reuse an index when querying many sensor positions.
pub fn visible_vertices(mesh: &TriangleMesh, sensor: &Point3) -> BTreeSet<usize> {
    VisibilityIndex::new(mesh).visible_vertices(sensor).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{plate, unit_cube, uv_sphere};
    use nalgebra::{Isometry3, Translation3, UnitQuaternion};

    /// Exhaustive oracle: test every non-incident triangle.
    fn brute_force(mesh: &TriangleMesh, sensor: &Point3) -> BTreeSet<usize> {
        let eps = SHORTENING_FACTOR * mesh.bounding_box_diagonal();
        (0..mesh.vertex_count())
            .filter(|&v| {
                let d = mesh.vertices()[v] - sensor;
                let len = d.norm();
                let dir = d / len;
                !mesh
                    .faces()
                    .iter()
                    .filter(|f| !f.contains(&v))
                    .any(|f| segment_hits_triangle(sensor, &dir, len - eps, mesh, *f))
            })
            .collect()
    }

    #[test]
    fn lone_triangle_fully_visible() {
        let tri = TriangleMesh::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(visible_vertices(&tri, &Point3::new(0.2, 0.2, 3.0)).len(), 3);
    }

    #[test]
    fn cube_from_above_sees_top_face_only() {
        let cube = unit_cube(1);
        let vis = visible_vertices(&cube, &Point3::new(0.0, 0.0, 10.0));
        assert_eq!(vis.len(), 4);
        for v in vis {
            assert_eq!(cube.vertices()[v].z, 0.5);
        }
    }

    #[test]
    fn plate_occludes_vertex_behind_it() {
        let big = plate(4.0, 4.0, 1, 1);
        let mut vertices = big.vertices().to_vec();
        let mut faces = big.faces().to_vec();
        // small triangle 1 m below the plate
        let base = vertices.len();
        vertices.extend([
            Point3::new(0.0, 0.0, -1.0),
            Point3::new(0.1, 0.0, -1.0),
            Point3::new(0.0, 0.1, -1.0),
        ]);
        faces.push([base, base + 1, base + 2]);
        let mesh = TriangleMesh::new(vertices, faces).unwrap();
        let vis = visible_vertices(&mesh, &Point3::new(0.0, 0.0, 5.0));
        assert!(!vis.contains(&base));
        assert!((0..4).all(|v| vis.contains(&v)));
    }

    #[test]
    fn bvh_matches_brute_force() {
        let sphere = uv_sphere(0.3, 9, 14);
        let cube = unit_cube(3);
        let sensors = [
            Point3::new(0.0, 0.0, 2.0),
            Point3::new(1.3, -0.7, 0.9),
            Point3::new(-2.0, 0.1, -0.3),
            Point3::new(0.05, 3.0, 0.0),
        ];
        for mesh in [&sphere, &cube] {
            let index = VisibilityIndex::new(mesh);
            for s in &sensors {
                let fast: BTreeSet<usize> = index.visible_vertices(s).into_iter().collect();
                assert_eq!(fast, brute_force(mesh, s));
            }
        }
    }

    #[test]
    fn convex_visible_vertices_have_front_facing_face() {
        let mesh = uv_sphere(0.5, 10, 16);
        let sensor = Point3::new(0.4, -1.2, 1.7);
        let adj = mesh.vertex_faces();
        for v in visible_vertices(&mesh, &sensor) {
            let p = mesh.vertices()[v];
            assert!(adj[v]
                .iter()
                .any(|&f| mesh.face_normal_raw(f).dot(&(sensor - p)) > 0.0));
        }
    }

    #[test]
    fn invariant_under_rigid_motion() {
        let mesh = unit_cube(3);
        let sensor = Point3::new(1.5, 0.8, 2.2);
        let iso = Isometry3::from_parts(
            Translation3::new(0.3, -2.0, 5.0),
            UnitQuaternion::from_euler_angles(0.3, -0.7, 1.1),
        );
        let a = visible_vertices(&mesh, &sensor);
        let b = visible_vertices(&mesh.transformed(&iso), &(iso * sensor));
        assert_eq!(a, b);
    }
}
