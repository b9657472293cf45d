//! Millimeter-wave synthetic-aperture radar toolkit.
//!
//! The crate covers the whole desk-scale pipeline:
//!
//! * [`mesh`]: triangle meshes, OBJ/PLY loading, edge-vertex classification
//!   and ray-cast vertex visibility.
//! * [`radar`]: FMCW waveforms, measurement apertures and theoretical
//!   resolution.
//! * [`sim`]: raw-signal synthesis from meshes under full, specular and edge
//!   reflection models, plus weighted image combination.
//! * [`imaging`]: coherent backprojection into complex voxel volumes,
//!   trajectory interpolation, background subtraction, 2D projection,
//!   colorization and prompt-point selection.
//! * [`eval`]: point-cloud extraction, ICP alignment and 3D F-score.
//! * [`formats`]: the `MSIG` / `MVOL` binary containers and PLY cloud export.
//!
//! All heavy kernels are data-parallel through rayon and produce bit-identical
//! output regardless of the number of worker threads.

pub mod error;
pub mod eval;
pub mod formats;
pub mod imaging;
pub mod mesh;
pub mod radar;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use eval::{
    best_weight_fscore, default_weight_grid, extract_point_cloud, f_score, icp_align, FScoreReport,
    IcpResult, PointCloud,
};
pub use imaging::{
    backproject, colorize, interpolate_trajectory, project_2d, select_prompt_points,
    subtract_background, subtract_images, Axis, ImageVolume, Projection2d, RgbRaster, TimedPose,
    VoxelGrid,
};
pub use mesh::{
    compute_edge_vertices, load_mesh, visible_vertices, EdgeVertexSet, MeshValidationReport,
    TriangleMesh, VisibilityIndex,
};
pub use radar::{
    cross_range_resolution, make_planar_aperture, range_resolution, AperturePath, Waveform,
    SPEED_OF_LIGHT,
};
pub use sim::{
    combine_images, sample_combined_image, simulate_signals, simulate_vertex_reflection,
    RawSignalSet, ReflectionKind, ReflectionModel,
};

/// 3D point in meters.
pub type Point3 = nalgebra::Point3<f64>;
/// 3D vector in meters.
pub type Vector3 = nalgebra::Vector3<f64>;
pub use num_complex::{Complex32, Complex64};
