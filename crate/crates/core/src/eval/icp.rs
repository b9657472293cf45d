//! Point-to-point ICP with centroid initialization.

use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, UnitQuaternion};

use super::neighbors::SpatialHash;
use super::PointCloud;
use crate::error::{Error, Result};
use crate::{Point3, Vector3};

/// Ratio of second to first principal scatter below which a cloud is treated
/// as collinear and only translation is fitted.
const COLLINEAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpOptions {
    pub max_iterations: usize,
    /// Stop once the mean-squared error improves by less than this.
    pub tolerance: f64,
    /// Spatial-hash cell size for nearest-neighbor lookups. `None` picks one
    /// from the target's bounding box and point count.
    pub cell_size: Option<f64>,
}

impl Default for IcpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            tolerance: 1e-12,
            cell_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    /// Maps source coordinates into the target frame.
    pub transform: Isometry3<f64>,
    pub aligned: PointCloud,
    /// Accepted iterations after initialization.
    pub iterations: usize,
    /// Mean-squared nearest-neighbor distance after initialization and after
    /// every accepted iteration; non-increasing.
    pub mse_history: Vec<f64>,
}

impl IcpResult {
    pub fn final_mse(&self) -> f64 {
        *self.mse_history.last().expect("history is never empty")
    }
}

pub fn icp_align(source: &PointCloud, target: &PointCloud, max_iterations: usize, tolerance: f64) -> Result<IcpResult> {
    icp_align_with(
        source,
        target,
        &IcpOptions {
            max_iterations,
            tolerance,
            cell_size: None,
        },
    )
}

pub fn icp_align_with(source: &PointCloud, target: &PointCloud, options: &IcpOptions) -> Result<IcpResult> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::domain("ICP needs two non-empty clouds"));
    }
    let src = source.points();
    let tgt = target.points();
    let cell = options
        .cell_size
        .filter(|c| *c > 0.0 && c.is_finite())
        .unwrap_or_else(|| auto_cell_size(tgt));
    let index = SpatialHash::new(tgt, cell);
    let translation_only = is_degenerate(src);

    let shift = centroid(tgt) - centroid(src);
    let mut transform = Isometry3::from_parts(Translation3::from(shift), UnitQuaternion::identity());
    let (mut matches, mut mse) = correspond(&index, src, &transform);
    let mut history = vec![mse];
    let mut iterations = 0;

    for _ in 0..options.max_iterations {
        let matched: Vec<Point3> = matches.iter().map(|&i| tgt[i]).collect();
        let candidate = if translation_only {
            let t = centroid(&matched) - centroid(src);
            Isometry3::from_parts(Translation3::from(t), UnitQuaternion::identity())
        } else {
            kabsch(src, &matched)
        };
        let (next_matches, next_mse) = correspond(&index, src, &candidate);
        if next_mse > mse {
            break;
        }
        let improvement = mse - next_mse;
        transform = candidate;
        matches = next_matches;
        mse = next_mse;
        history.push(mse);
        iterations += 1;
        if improvement < options.tolerance {
            break;
        }
    }

    let aligned = PointCloud::new(src.iter().map(|p| transform * p).collect())?;
    Ok(IcpResult {
        transform,
        aligned,
        iterations,
        mse_history: history,
    })
}

fn correspond(index: &SpatialHash<'_>, src: &[Point3], transform: &Isometry3<f64>) -> (Vec<usize>, f64) {
    let mut sum = 0.0;
    let matches = src
        .iter()
        .map(|p| {
            let (i, d2) = index.nearest(&(transform * p)).expect("target is non-empty");
            sum += d2;
            i
        })
        .collect();
    (matches, sum / src.len() as f64)
}

pub(crate) fn centroid(points: &[Point3]) -> Point3 {
    let sum = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords);
    Point3::from(sum / points.len() as f64)
}

fn is_degenerate(points: &[Point3]) -> bool {
    if points.len() < 3 {
        return true;
    }
    let c = centroid(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - c;
        cov += d * d.transpose();
    }
    let mut s: Vec<f64> = cov.symmetric_eigenvalues().iter().map(|v| v.abs()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s[0] == 0.0 || s[1] <= COLLINEAR_RATIO * s[0]
}

/// Least-squares rigid transform taking `src[i]` onto `dst[i]`.
pub(crate) fn kabsch(src: &[Point3], dst: &[Point3]) -> Isometry3<f64> {
    let cs = centroid(src);
    let cd = centroid(dst);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let mut r = v_t.transpose() * u.transpose();
    if r.determinant() < 0.0 {
        let mut fix = Matrix3::identity();
        fix[(2, 2)] = -1.0;
        r = v_t.transpose() * fix * u.transpose();
    }
    let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let t = cd.coords - rot * cs.coords;
    Isometry3::from_parts(Translation3::from(t), rot)
}

fn auto_cell_size(points: &[Point3]) -> f64 {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let diag = (hi - lo).norm();
    let cell = diag / (points.len() as f64).cbrt().max(1.0);
    if cell > 0.0 {
        cell
    } else {
        1.0
    }
}
