//! Coherent backprojection imaging and image post-processing.

mod projection;
mod trajectory;

use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radar::{cross_range_resolution, range_resolution, AperturePath, Waveform, SPEED_OF_LIGHT};
use crate::sim::RawSignalSet;
use crate::{Point3, Vector3};

pub use projection::{
    colorize, project_2d, rainbow_lut, select_prompt_points, Axis, Projection2d, RgbRaster,
};
pub use trajectory::{interpolate_trajectory, InterpolatedTrajectory, TimedPose};

/// Maximum distance between corresponding positions for two signal sets to
/// count as the same trajectory.
pub const POSITION_TOLERANCE: f64 = 1e-6;

/// Regular voxel lattice. `origin` is the center of voxel (0, 0, 0); voxel
/// `(i, j, k)` is centered at `origin + (i·sx, j·sy, k·sz)`. Linear indices
/// run x fastest, then y, then z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct VoxelGrid {
    pub origin: Point3,
    pub spacing: Vector3,
    pub dims: [usize; 3],
}

#[derive(Deserialize)]
struct RawGrid {
    origin: Point3,
    spacing: Vector3,
    dims: [usize; 3],
}

impl TryFrom<RawGrid> for VoxelGrid {
    type Error = Error;

    fn try_from(r: RawGrid) -> Result<Self> {
        VoxelGrid::new(r.origin, r.spacing, r.dims)
    }
}

impl VoxelGrid {
    pub fn new(origin: Point3, spacing: Vector3, dims: [usize; 3]) -> Result<Self> {
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::domain("grid origin must be finite"));
        }
        if !spacing.iter().all(|s| s.is_finite() && *s > 0.0) {
            return Err(Error::domain(format!("grid spacing must be positive, got {spacing:?}")));
        }
        if dims.contains(&0) {
            return Err(Error::domain(format!("grid dims must be at least 1, got {dims:?}")));
        }
        Ok(Self { origin, spacing, dims })
    }

    /// Grid of `dims` voxels whose center voxel (rounded down) sits at `center`.
    pub fn centered(center: Point3, spacing: Vector3, dims: [usize; 3]) -> Result<Self> {
        let half = Vector3::new(
            (dims[0].saturating_sub(1) / 2) as f64 * spacing.x,
            (dims[1].saturating_sub(1) / 2) as f64 * spacing.y,
            (dims[2].saturating_sub(1) / 2) as f64 * spacing.z,
        );
        Self::new(center - half, spacing, dims)
    }

    /// Grid covering the box `[lo, hi]` grown by `margin` on every side with
    /// cubic voxels of size `spacing`.
    pub fn covering(lo: Point3, hi: Point3, margin: f64, spacing: f64) -> Result<Self> {
        let lo = lo - Vector3::repeat(margin);
        let hi = hi + Vector3::repeat(margin);
        let ext = hi - lo;
        let dims = [0, 1, 2].map(|i| (ext[i] / spacing).ceil().max(0.0) as usize + 1);
        let used = Vector3::new(
            (dims[0] - 1) as f64 * spacing,
            (dims[1] - 1) as f64 * spacing,
            (dims[2] - 1) as f64 * spacing,
        );
        let origin = lo - (used - ext) / 2.0;
        Self::new(origin, Vector3::repeat(spacing), dims)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let i = index % self.dims[0];
        let j = (index / self.dims[0]) % self.dims[1];
        let k = index / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn voxel_center(&self, index: usize) -> Point3 {
        let [i, j, k] = self.coords(index);
        Point3::new(
            self.origin.x + i as f64 * self.spacing.x,
            self.origin.y + j as f64 * self.spacing.y,
            self.origin.z + k as f64 * self.spacing.z,
        )
    }

    /// Nearest voxel to `p`, if it lies inside the grid (within half a voxel).
    pub fn nearest_voxel(&self, p: &Point3) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let f = ((p[a] - self.origin[a]) / self.spacing[a]).round();
            if f < 0.0 || f >= self.dims[a] as f64 {
                return None;
            }
            c[a] = f as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    pub fn same_as(&self, other: &VoxelGrid) -> bool {
        self == other
    }

    pub fn translated(&self, offset: &Vector3) -> Self {
        Self {
            origin: self.origin + offset,
            ..*self
        }
    }

    /// Default grid for imaging a target occupying `[lo, hi]`: cubic voxels
    /// of half the finest theoretical resolution, and a margin of twice the
    /// coarsest resolution around the box.
    pub fn auto(lo: Point3, hi: Point3, waveform: &Waveform, aperture: &AperturePath) -> Result<Self> {
        let res = theoretical_resolution(waveform, aperture, &nalgebra::center(&lo, &hi))?;
        let finest = res.iter().copied().filter(|r| r.is_finite()).fold(f64::INFINITY, f64::min);
        let coarsest = res.iter().copied().filter(|r| r.is_finite()).fold(0.0, f64::max);
        Self::covering(lo, hi, 2.0 * coarsest, finest / 2.0)
    }
}

/// Theoretical (δx, δy, δz) for a target at `target`. Cross-range terms use
/// the center wavelength and the aperture's x/y extent; an axis with zero
/// extent yields infinity.
pub fn theoretical_resolution(waveform: &Waveform, aperture: &AperturePath, target: &Point3) -> Result<[f64; 3]> {
    let z0 = (target - aperture.centroid()).norm();
    let ext = aperture.extent();
    let lambda = waveform.center_wavelength();
    let cross = |d: f64| {
        if d > 0.0 && z0 > 0.0 {
            cross_range_resolution(lambda, z0, d)
        } else {
            Ok(f64::INFINITY)
        }
    };
    Ok([cross(ext.x)?, cross(ext.y)?, range_resolution(waveform)])
}

/// Complex voxel volume, stored as single-precision complex values.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageVolume {
    grid: VoxelGrid,
    values: Vec<Complex32>,
}

impl ImageVolume {
    pub fn new(grid: VoxelGrid, values: Vec<Complex32>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {:?} grid",
                values.len(),
                grid.dims
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::domain("image values must be finite"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: VoxelGrid) -> Self {
        Self {
            values: vec![Complex32::new(0.0, 0.0); grid.len()],
            grid,
        }
    }

    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex32] {
        &self.values
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    /// Magnitude of voxel `index` in double precision.
    pub fn magnitude(&self, index: usize) -> f64 {
        magnitude(self.values[index])
    }

    /// Index and magnitude of the strongest voxel (first one on ties).
    pub fn peak(&self) -> (usize, f64) {
        let mut best = (0, 0.0);
        for i in 0..self.values.len() {
            let m = self.magnitude(i);
            if m > best.1 {
                best = (i, m);
            }
        }
        best
    }
}

#[inline]
pub(crate) fn magnitude(v: Complex32) -> f64 {
    (v.re as f64).hypot(v.im as f64)
}

/// Exact kernel recomputation interval; between refreshes the per-sample
/// kernel is advanced by a fixed rotation.
const KERNEL_REFRESH: usize = 64;

/// Backprojects `signals` onto `grid`:
/// `I(x) = Σ_k Σ_j S[k, j] · exp(j·2π·d_k(x)/λ_j)` with round-trip distance
/// `d_k(x) = 2·|x − p_k|`. Voxels are processed in parallel; inside a voxel
/// the sum runs k outer, j inner in double precision, so the result does not
/// depend on the worker count.
pub fn backproject(signals: &RawSignalSet, grid: &VoxelGrid) -> ImageVolume {
    let waveform = signals.waveform();
    let n = waveform.num_samples;
    let f0 = waveform.start_frequency;
    let df = waveform.frequency_step();
    let positions = signals.aperture().positions();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|idx| {
            let x = grid.voxel_center(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, p) in positions.iter().enumerate() {
                let d = 2.0 * (x - p).norm();
                let row = signals.row(k);
                let step = Complex64::from_polar(1.0, 2.0 * PI * d * df / SPEED_OF_LIGHT);
                let mut kernel = Complex64::new(1.0, 0.0);
                for (j, s) in row.iter().enumerate() {
                    if j % KERNEL_REFRESH == 0 {
                        let f = f0 + j as f64 * df;
                        kernel = Complex64::from_polar(1.0, 2.0 * PI * d * f / SPEED_OF_LIGHT);
                    }
                    acc += s * kernel;
                    kernel *= step;
                }
            }
            debug_assert_eq!(signals.row(0).len(), n);
            Complex32::new(acc.re as f32, acc.im as f32)
        })
        .collect();
    ImageVolume {
        grid: *grid,
        values,
    }
}

/// Element-wise `scene − empty` on raw signals. Requires identical shape,
/// waveform and positions (within [`POSITION_TOLERANCE`]).
pub fn subtract_background(scene: &RawSignalSet, empty: &RawSignalSet) -> Result<RawSignalSet> {
    scene.check_same_shape(empty)?;
    if let Some(k) = first_position_mismatch(scene.aperture(), empty.aperture()) {
        return Err(Error::Alignment(format!(
            "position {k} differs between scene and background by more than {POSITION_TOLERANCE} m"
        )));
    }
    let bg = empty.samples();
    Ok(scene.map_samples(|i, s| s - bg[i]))
}

fn first_position_mismatch(a: &AperturePath, b: &AperturePath) -> Option<usize> {
    a.positions()
        .iter()
        .zip(b.positions())
        .position(|(p, q)| (p - q).norm() > POSITION_TOLERANCE)
}

/// Voxel-wise `a − b` for images on the same grid.
pub fn subtract_images(a: &ImageVolume, b: &ImageVolume) -> Result<ImageVolume> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::Dimension("image grids differ".into()));
    }
    Ok(ImageVolume {
        grid: a.grid,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    })
}

/// Background-subtracted image of `scene`. Subtracts raw signals when both
/// runs share a trajectory, otherwise images both runs and subtracts the
/// volumes.
pub fn image_with_background(scene: &RawSignalSet, empty: &RawSignalSet, grid: &VoxelGrid) -> Result<ImageVolume> {
    if scene.waveform() != empty.waveform() {
        return Err(Error::Alignment("scene and background use different waveforms".into()));
    }
    let aligned = scene.num_positions() == empty.num_positions()
        && first_position_mismatch(scene.aperture(), empty.aperture()).is_none();
    if aligned {
        Ok(backproject(&subtract_background(scene, empty)?, grid))
    } else {
        subtract_images(&backproject(scene, grid), &backproject(empty, grid))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::make_planar_aperture;
    use crate::sim::simulate_point_targets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wf() -> Waveform {
        Waveform::new(77e9, 4e9, 32).unwrap()
    }

    /// Direct double sum with an independently evaluated kernel per term.
    fn oracle_voxel(signals: &RawSignalSet, x: &Point3) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, p) in signals.aperture().positions().iter().enumerate() {
            let d = 2.0 * (x - p).norm();
            for j in 0..signals.num_samples() {
                let lambda = signals.waveform().wavelength_at(j);
                acc += signals.row(k)[j] * Complex64::from_polar(1.0, 2.0 * PI * d / lambda);
            }
        }
        acc
    }

    fn random_signals(seed: u64, ap: &AperturePath, w: &Waveform) -> RawSignalSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..ap.len() * w.num_samples)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        RawSignalSet::new(samples, ap.clone(), *w).unwrap()
    }

    #[test]
    fn grid_indexing() {
        let g = VoxelGrid::new(Point3::new(1.0, 2.0, 3.0), Vector3::new(0.1, 0.2, 0.3), [4, 3, 2]).unwrap();
        assert_eq!(g.len(), 24);
        assert_eq!(g.index(1, 2, 1), 1 + 4 * (2 + 3));
        assert_eq!(g.coords(g.index(3, 1, 1)), [3, 1, 1]);
        let c = g.voxel_center(g.index(2, 1, 1));
        assert!((c - Point3::new(1.2, 2.2, 3.3)).norm() < 1e-12);
        assert_eq!(g.nearest_voxel(&c), Some(g.index(2, 1, 1)));
        assert_eq!(g.nearest_voxel(&Point3::new(0.0, 0.0, 0.0)), None);
        assert!(VoxelGrid::new(Point3::origin(), Vector3::new(0.1, 0.0, 0.1), [1, 1, 1]).is_err());
        assert!(VoxelGrid::new(Point3::origin(), Vector3::repeat(0.1), [1, 0, 1]).is_err());
    }

    #[test]
    fn matches_direct_sum_oracle() {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.04, 0.02, 0.01).unwrap();
        let sig = random_signals(7, &ap, &wf());
        let grid = VoxelGrid::centered(Point3::new(0.001, -0.002, 0.0), Vector3::repeat(0.003), [3, 3, 3]).unwrap();
        let img = backproject(&sig, &grid);
        for idx in 0..grid.len() {
            let want = oracle_voxel(&sig, &grid.voxel_center(idx));
            let got = img.values()[idx];
            assert!((Complex64::new(got.re as f64, got.im as f64) - want).norm() <= 1e-5 * want.norm().max(1.0));
        }
    }

    #[test]
    fn coherent_sum_at_target() {
        let target = Point3::new(0.01, -0.02, 0.0);
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.25), 0.1, 0.05, 0.01).unwrap();
        let sig = simulate_point_targets(&[target], &ap, &wf()).unwrap();
        let grid = VoxelGrid::new(target, Vector3::repeat(0.001), [1, 1, 1]).unwrap();
        let v = backproject(&sig, &grid).magnitude(0);
        let kn = (ap.len() * wf().num_samples) as f64;
        assert!((v - kn).abs() <= 1e-9 * kn, "{v} vs {kn}");
    }

    #[test]
    fn zero_signals_give_zero_image() {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.02, 0.02, 0.01).unwrap();
        let grid = VoxelGrid::centered(Point3::origin(), Vector3::repeat(0.01), [2, 2, 2]).unwrap();
        let img = backproject(&RawSignalSet::zeros(ap, wf()), &grid);
        assert!(img.values().iter().all(|v| *v == Complex32::new(0.0, 0.0)));
    }

    #[test]
    fn background_subtraction() {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.02, 0.02, 0.01).unwrap();
        let a = random_signals(1, &ap, &wf());
        let zero = RawSignalSet::zeros(ap.clone(), wf());
        assert!(subtract_background(&a, &a).unwrap().samples().iter().all(|s| s.norm() == 0.0));
        assert_eq!(subtract_background(&a, &zero).unwrap(), a);

        let moved = RawSignalSet::zeros(ap.translated(&Vector3::new(0.0, 0.0, 1e-3)), wf());
        assert!(matches!(subtract_background(&a, &moved), Err(Error::Alignment(_))));
        let short = RawSignalSet::zeros(AperturePath::new(vec![Point3::origin()]).unwrap(), wf());
        assert!(matches!(subtract_background(&a, &short), Err(Error::Alignment(_))));
    }

    #[test]
    fn background_falls_back_to_image_subtraction() {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.02, 0.02, 0.01).unwrap();
        let moved = ap.translated(&Vector3::new(0.005, 0.0, 0.0));
        let a = random_signals(1, &ap, &wf());
        let b = random_signals(2, &moved, &wf());
        let grid = VoxelGrid::centered(Point3::origin(), Vector3::repeat(0.01), [2, 2, 1]).unwrap();
        let got = image_with_background(&a, &b, &grid).unwrap();
        let want = subtract_images(&backproject(&a, &grid), &backproject(&b, &grid)).unwrap();
        assert_eq!(got, want);
    }

    #[test]
    fn auto_grid_covers_target() {
        let ap = make_planar_aperture(Point3::new(0.0, 0.0, 0.3), 0.2, 0.2, 0.01).unwrap();
        let lo = Point3::new(-0.05, -0.05, -0.05);
        let hi = Point3::new(0.05, 0.05, 0.05);
        let g = VoxelGrid::auto(lo, hi, &wf(), &ap).unwrap();
        let res = theoretical_resolution(&wf(), &ap, &Point3::origin()).unwrap();
        let finest = res.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((g.spacing.x - finest / 2.0).abs() < 1e-15);
        let last = g.voxel_center(g.len() - 1);
        for a in 0..3 {
            assert!(g.origin[a] <= lo[a] && last[a] >= hi[a]);
        }
    }
}
