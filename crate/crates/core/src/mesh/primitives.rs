//! Procedural meshes used by tests, benches and demos. All are welded (shared
//! vertices between adjacent faces) and wound counter-clockwise when viewed
//! from outside.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::TriangleMesh;
use crate::{Point3, Vector3};

/// Axis-aligned cube of side 1 centered at the origin. Each face is split
/// into `subdivisions`² quads; `subdivisions = 1` gives the classic
/// 8-vertex, 12-triangle cube.
pub fn unit_cube(subdivisions: usize) -> TriangleMesh {
    let n = subdivisions.max(1);
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vertex = |lattice: [usize; 3]| -> usize {
        *index.entry(lattice).or_insert_with(|| {
            vertices.push(Point3::new(
                lattice[0] as f64 / n as f64 - 0.5,
                lattice[1] as f64 / n as f64 - 0.5,
                lattice[2] as f64 / n as f64 - 0.5,
            ));
            vertices.len() - 1
        })
    };
    // (normal axis, u axis, v axis) with u × v = +normal axis
    let frames = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];
    for &(w, u, v) in &frames {
        for positive in [false, true] {
            let (u, v) = if positive { (u, v) } else { (v, u) };
            let level = if positive { n } else { 0 };
            for i in 0..n {
                for j in 0..n {
                    let mut corner = |di: usize, dj: usize| {
                        let mut l = [0usize; 3];
                        l[w] = level;
                        l[u] = i + di;
                        l[v] = j + dj;
                        vertex(l)
                    };
                    let a = corner(0, 0);
                    let b = corner(1, 0);
                    let c = corner(1, 1);
                    let d = corner(0, 1);
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                }
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("cube construction is valid")
}

/// Axis-aligned box with the given full extents, centered at the origin.
pub fn cuboid(extents: Vector3, subdivisions: usize) -> TriangleMesh {
    let cube = unit_cube(subdivisions);
    let vertices = cube
        .vertices()
        .iter()
        .map(|p| Point3::from(p.coords.component_mul(&extents)))
        .collect();
    TriangleMesh::new(vertices, cube.faces().to_vec()).expect("valid cuboid")
}

/// UV sphere centered at the origin.
pub fn uv_sphere(radius: f64, stacks: usize, slices: usize) -> TriangleMesh {
    let stacks = stacks.max(2);
    let slices = slices.max(3);
    let mut vertices = vec![Point3::new(0.0, 0.0, radius)];
    for s in 1..stacks {
        let theta = PI * s as f64 / stacks as f64;
        for k in 0..slices {
            let phi = 2.0 * PI * k as f64 / slices as f64;
            vertices.push(Point3::new(
                radius * theta.sin() * phi.cos(),
                radius * theta.sin() * phi.sin(),
                radius * theta.cos(),
            ));
        }
    }
    vertices.push(Point3::new(0.0, 0.0, -radius));
    let south = vertices.len() - 1;
    let ring = |s: usize, k: usize| 1 + (s - 1) * slices + (k % slices);
    let mut faces = Vec::new();
    for k in 0..slices {
        faces.push([0, ring(1, k), ring(1, k + 1)]);
    }
    for s in 1..stacks - 1 {
        for k in 0..slices {
            let (a, b) = (ring(s, k), ring(s, k + 1));
            let (c, d) = (ring(s + 1, k), ring(s + 1, k + 1));
            faces.push([a, c, d]);
            faces.push([a, d, b]);
        }
    }
    for k in 0..slices {
        faces.push([south, ring(stacks - 1, k + 1), ring(stacks - 1, k)]);
    }
    TriangleMesh::new(vertices, faces).expect("valid sphere")
}

/// Closed cylinder along z centered at the origin, shaped like a food can.
/// `rings` controls the number of height subdivisions on the side wall and
/// concentric rings on each cap.
pub fn cylinder(radius: f64, height: f64, segments: usize, rings: usize) -> TriangleMesh {
    let segments = segments.max(3);
    let rings = rings.max(1);
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let angle = |k: usize| 2.0 * PI * (k % segments) as f64 / segments as f64;

    // side wall rows 0..=rings, bottom to top
    let side = |row: usize, k: usize| row * segments + (k % segments);
    for row in 0..=rings {
        let z = -height / 2.0 + height * row as f64 / rings as f64;
        for k in 0..segments {
            vertices.push(Point3::new(radius * angle(k).cos(), radius * angle(k).sin(), z));
        }
    }
    for row in 0..rings {
        for k in 0..segments {
            let (a, b) = (side(row, k), side(row, k + 1));
            let (c, d) = (side(row + 1, k + 1), side(row + 1, k));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }

    // caps: concentric rings from the rim inward, then a center fan
    for top in [true, false] {
        let z = if top { height / 2.0 } else { -height / 2.0 };
        let rim_row = if top { rings } else { 0 };
        let mut outer: Vec<usize> = (0..segments).map(|k| side(rim_row, k)).collect();
        for r in 1..rings {
            let rr = radius * (rings - r) as f64 / rings as f64;
            let base = vertices.len();
            for k in 0..segments {
                vertices.push(Point3::new(rr * angle(k).cos(), rr * angle(k).sin(), z));
            }
            let inner: Vec<usize> = (0..segments).map(|k| base + k).collect();
            for k in 0..segments {
                let k1 = (k + 1) % segments;
                let (a, b, c, d) = (outer[k], outer[k1], inner[k1], inner[k]);
                if top {
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                } else {
                    faces.push([a, c, b]);
                    faces.push([a, d, c]);
                }
            }
            outer = inner;
        }
        vertices.push(Point3::new(0.0, 0.0, z));
        let center = vertices.len() - 1;
        for k in 0..segments {
            let k1 = (k + 1) % segments;
            if top {
                faces.push([center, outer[k], outer[k1]]);
            } else {
                faces.push([center, outer[k1], outer[k]]);
            }
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid cylinder")
}

/// Flat rectangular plate in the z = 0 plane facing +z, split into an
/// `nx` × `ny` quad grid.
pub fn plate(width: f64, height: f64, nx: usize, ny: usize) -> TriangleMesh {
    let (nx, ny) = (nx.max(1), ny.max(1));
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(
                width * (i as f64 / nx as f64 - 0.5),
                height * (j as f64 / ny as f64 - 0.5),
                0.0,
            ));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut faces = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, faces).expect("valid plate")
}
