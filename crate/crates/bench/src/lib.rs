//! Shared fixtures for the criterion benchmarks.

use mmsar_core::mesh::primitives::uv_sphere;
use mmsar_core::{make_planar_aperture, AperturePath, Point3, PointCloud, TriangleMesh, VoxelGrid, Waveform};

pub struct Scene {
    pub mesh: TriangleMesh,
    pub aperture: AperturePath,
    pub waveform: Waveform,
    pub grid: VoxelGrid,
}

/// A 5 cm sphere under a 20 cm square scan, imaged on a 24³ grid.
pub fn sphere_scene(samples: usize) -> Scene {
    Scene {
        mesh: uv_sphere(0.05, 16, 32),
        aperture: make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.2, 0.2, 0.01).expect("valid aperture"),
        waveform: Waveform::new(77e9, 4e9, samples).expect("valid waveform"),
        grid: VoxelGrid::covering(Point3::new(-0.05, -0.05, -0.05), Point3::new(0.05, 0.05, 0.05), 0.01, 0.005)
            .expect("valid grid"),
    }
}

/// Deterministic pseudo-random cloud in a 10 cm cube.
pub fn lattice_cloud(n: usize, salt: u64) -> PointCloud {
    let mut state = salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 * 0.1
    };
    PointCloud::new((0..n).map(|_| Point3::new(next(), next(), next())).collect()).expect("finite points")
}
