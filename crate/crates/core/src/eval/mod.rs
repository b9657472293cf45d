//! Image-to-point-cloud conversion, alignment and 3D F-score.

mod icp;
mod neighbors;

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{magnitude, ImageVolume};
use crate::sim::combine_images;
use crate::Point3;

pub use icp::{icp_align, icp_align_with, IcpOptions, IcpResult};
pub use neighbors::SpatialHash;

/// Default extraction threshold, dB below the volume peak.
pub const DEFAULT_THRESHOLD_DB: f64 = 10.0;

/// Cloud size above which indicator sums run in parallel.
const PARALLEL_POINTS: usize = 8192;

/// A set of distinct, finite 3D points in insertion order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3>,
}

impl PointCloud {
    /// Drops exact duplicates (first occurrence kept). `-0.0` and `0.0`
    /// compare equal.
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::domain("point coordinates must be finite"));
        }
        let mut seen = HashSet::with_capacity(points.len());
        let points = points
            .into_iter()
            .filter(|p| seen.insert(p.coords.map(|c| (c + 0.0).to_bits())))
            .collect();
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// One point per voxel center whose magnitude is within `threshold_db` of
/// the volume's peak magnitude. An all-zero volume gives an empty cloud.
pub fn extract_point_cloud(volume: &ImageVolume, threshold_db: f64) -> Result<PointCloud> {
    if !(threshold_db.is_finite() && threshold_db >= 0.0) {
        return Err(Error::domain(format!("threshold must be a nonnegative dB value, got {threshold_db}")));
    }
    let (_, peak) = volume.peak();
    if peak == 0.0 {
        return Ok(PointCloud::default());
    }
    let floor = peak * 10f64.powf(-threshold_db / 20.0);
    let grid = volume.grid();
    let points = volume
        .values()
        .iter()
        .enumerate()
        .filter(|(_, v)| {
            let m = magnitude(**v);
            m > 0.0 && m >= floor
        })
        .map(|(i, _)| grid.voxel_center(i))
        .collect();
    PointCloud::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FScoreReport {
    pub precision: f64,
    pub recall: f64,
    pub fscore: f64,
    pub tau_f: f64,
    #[serde(rename = "alpha1")]
    pub best_alpha1: Option<f64>,
    #[serde(rename = "alpha2")]
    pub best_alpha2: Option<f64>,
}

impl FScoreReport {
    fn from_fractions(precision: f64, recall: f64, tau_f: f64) -> Self {
        let sum = precision + recall;
        let fscore = if sum > 0.0 { 2.0 * precision * recall / sum } else { 0.0 };
        Self {
            precision,
            recall,
            fscore,
            tau_f,
            best_alpha1: None,
            best_alpha2: None,
        }
    }
}

/// Number of `queries` with a neighbor in `index` strictly closer than `tau`.
fn count_matched(queries: &[Point3], index: &SpatialHash<'_>, tau: f64) -> usize {
    if queries.len() >= PARALLEL_POINTS {
        queries.par_iter().filter(|q| index.any_within(q, tau)).count()
    } else {
        queries.iter().filter(|q| index.any_within(q, tau)).count()
    }
}

/// Precision is the fraction of real points with a synthetic point closer
/// than `tau_f`; recall is the converse; F is their harmonic mean (0 when
/// both are 0).
pub fn f_score(real_cloud: &PointCloud, synthetic_cloud: &PointCloud, tau_f: f64) -> Result<FScoreReport> {
    if real_cloud.is_empty() || synthetic_cloud.is_empty() {
        return Err(Error::domain("F-score needs two non-empty clouds"));
    }
    if !(tau_f > 0.0 && tau_f.is_finite()) {
        return Err(Error::domain(format!("tau_f must be positive, got {tau_f}")));
    }
    let real_index = SpatialHash::new(real_cloud.points(), tau_f);
    let syn_index = SpatialHash::new(synthetic_cloud.points(), tau_f);
    let pr = count_matched(real_cloud.points(), &syn_index, tau_f) as f64 / real_cloud.len() as f64;
    let re = count_matched(synthetic_cloud.points(), &real_index, tau_f) as f64 / synthetic_cloud.len() as f64;
    Ok(FScoreReport::from_fractions(pr, re, tau_f))
}

/// `(a, 1 − a)` for `a = 0, 0.1, …, 1`.
pub fn default_weight_grid() -> Vec<(f64, f64)> {
    (0..=10).map(|i| (i as f64 / 10.0, (10 - i) as f64 / 10.0)).collect()
}

/// Default F-score distance threshold: twice the largest voxel spacing.
pub fn default_tau_f(volume: &ImageVolume) -> f64 {
    2.0 * volume.grid().spacing.max()
}

/// Sweeps `weight_grid`, scoring each combined synthetic image against the
/// real volume after ICP alignment, and returns the best report with its
/// weights. Ties go to the earliest grid entry. Weight pairs whose combined
/// image yields no points are skipped.
pub fn best_weight_fscore(
    real_volume: &ImageVolume,
    image_specular: &ImageVolume,
    image_edge: &ImageVolume,
    weight_grid: &[(f64, f64)],
    tau_f: f64,
    threshold_db: f64,
) -> Result<FScoreReport> {
    Ok(weight_sweep(real_volume, image_specular, image_edge, weight_grid, tau_f, threshold_db)?.best)
}

/// Result of a full weight sweep.
#[derive(Debug, Clone)]
pub struct WeightSweep {
    pub best: FScoreReport,
    /// ICP-aligned synthetic cloud for the best weights.
    pub best_aligned: PointCloud,
    pub real_cloud: PointCloud,
    /// Per grid entry; `None` where the synthetic cloud was empty.
    pub scores: Vec<Option<FScoreReport>>,
}

pub fn weight_sweep(
    real_volume: &ImageVolume,
    image_specular: &ImageVolume,
    image_edge: &ImageVolume,
    weight_grid: &[(f64, f64)],
    tau_f: f64,
    threshold_db: f64,
) -> Result<WeightSweep> {
    if weight_grid.is_empty() {
        return Err(Error::domain("weight grid is empty"));
    }
    if let Some(bad) = weight_grid.iter().find(|(a, b)| !(*a >= 0.0 && *b >= 0.0 && a + b > 0.0)) {
        return Err(Error::domain(format!("invalid weight pair {bad:?}")));
    }
    if !real_volume.grid().same_as(image_specular.grid()) {
        return Err(Error::Dimension("real and synthetic volumes use different grids".into()));
    }
    let real_cloud = extract_point_cloud(real_volume, threshold_db)?;
    if real_cloud.is_empty() {
        return Err(Error::EmptyCloud(format!("real volume has no voxels within {threshold_db} dB of its peak")));
    }
    let icp = IcpOptions {
        cell_size: Some(tau_f),
        ..IcpOptions::default()
    };
    let results: Vec<Option<(FScoreReport, PointCloud)>> = weight_grid
        .par_iter()
        .map(|&(a1, a2)| -> Result<Option<(FScoreReport, PointCloud)>> {
            let combined = combine_images(image_specular, image_edge, a1, a2)?;
            let cloud = extract_point_cloud(&combined, threshold_db)?;
            if cloud.is_empty() {
                return Ok(None);
            }
            let aligned = icp_align_with(&cloud, &real_cloud, &icp)?.aligned;
            let mut report = f_score(&real_cloud, &aligned, tau_f)?;
            report.best_alpha1 = Some(a1);
            report.best_alpha2 = Some(a2);
            Ok(Some((report, aligned)))
        })
        .collect::<Result<_>>()?;

    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        if let Some((rep, _)) = r {
            if best.is_none_or(|b| rep.fscore > results[b].as_ref().expect("scored").0.fscore) {
                best = Some(i);
            }
        }
    }
    let best = best.ok_or_else(|| Error::EmptyCloud("every weight pair produced an empty synthetic cloud".into()))?;
    let (best_report, best_aligned) = results[best].clone().expect("scored");
    Ok(WeightSweep {
        best: best_report,
        best_aligned,
        real_cloud,
        scores: results.into_iter().map(|r| r.map(|(rep, _)| rep)).collect(),
    })
}
