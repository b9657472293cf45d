//! FMCW waveforms, measurement apertures and theoretical image resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Point3, Vector3};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Linear frequency sweep: sample `j` sits at
/// `start_frequency + j · bandwidth / (num_samples − 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWaveform")]
pub struct Waveform {
    pub start_frequency: f64,
    pub bandwidth: f64,
    pub num_samples: usize,
}

#[derive(Deserialize)]
struct RawWaveform {
    start_frequency: f64,
    bandwidth: f64,
    num_samples: usize,
}

impl TryFrom<RawWaveform> for Waveform {
    type Error = Error;

    fn try_from(r: RawWaveform) -> Result<Self> {
        Waveform::new(r.start_frequency, r.bandwidth, r.num_samples)
    }
}

impl Waveform {
    pub fn new(start_frequency: f64, bandwidth: f64, num_samples: usize) -> Result<Self> {
        if !(start_frequency.is_finite() && start_frequency > 0.0) {
            return Err(Error::domain(format!("start frequency must be positive, got {start_frequency}")));
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::domain(format!("bandwidth must be positive, got {bandwidth}")));
        }
        if num_samples < 2 {
            return Err(Error::domain(format!("need at least 2 samples, got {num_samples}")));
        }
        Ok(Self {
            start_frequency,
            bandwidth,
            num_samples,
        })
    }

    /// 77 GHz band: 77–81 GHz, 256 samples.
    pub fn band_77ghz() -> Self {
        Self::new(77e9, 4e9, 256).expect("valid preset")
    }

    /// 24 GHz band: 24–24.25 GHz, 256 samples.
    pub fn band_24ghz() -> Self {
        Self::new(24e9, 0.25e9, 256).expect("valid preset")
    }

    /// Frequency spacing between consecutive samples.
    pub fn frequency_step(&self) -> f64 {
        self.bandwidth / (self.num_samples - 1) as f64
    }

    pub fn frequency_at(&self, j: usize) -> f64 {
        self.start_frequency + j as f64 * self.frequency_step()
    }

    pub fn wavelength_at(&self, j: usize) -> f64 {
        SPEED_OF_LIGHT / self.frequency_at(j)
    }

    pub fn center_frequency(&self) -> f64 {
        self.start_frequency + self.bandwidth / 2.0
    }

    pub fn center_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_frequency()
    }

    /// Per-sample wavelengths.
    pub fn wavelengths(&self) -> Vec<f64> {
        (0..self.num_samples).map(|j| self.wavelength_at(j)).collect()
    }
}

/// Ordered sensor positions, optionally timestamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAperture")]
pub struct AperturePath {
    positions: Vec<Point3>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamps: Option<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawAperture {
    positions: Vec<Point3>,
    #[serde(default)]
    timestamps: Option<Vec<f64>>,
}

impl TryFrom<RawAperture> for AperturePath {
    type Error = Error;

    fn try_from(r: RawAperture) -> Result<Self> {
        match r.timestamps {
            Some(t) => AperturePath::with_timestamps(r.positions, t),
            None => AperturePath::new(r.positions),
        }
    }
}

impl AperturePath {
    pub fn new(positions: Vec<Point3>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::domain("aperture needs at least one position"));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::domain("aperture positions must be finite"));
        }
        Ok(Self {
            positions,
            timestamps: None,
        })
    }

    pub fn with_timestamps(positions: Vec<Point3>, timestamps: Vec<f64>) -> Result<Self> {
        let mut path = Self::new(positions)?;
        if timestamps.len() != path.positions.len() {
            return Err(Error::Dimension(format!(
                "{} timestamps for {} positions",
                timestamps.len(),
                path.positions.len()
            )));
        }
        if timestamps.iter().any(|t| !t.is_finite()) || timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("timestamps must be finite and strictly increasing"));
        }
        path.timestamps = Some(timestamps);
        Ok(path)
    }

    pub fn positions(&self) -> &[Point3] {
        &self.positions
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn translated(&self, offset: &Vector3) -> Self {
        Self {
            positions: self.positions.iter().map(|p| p + offset).collect(),
            timestamps: self.timestamps.clone(),
        }
    }

    /// Axis-aligned extent of the positions (max − min per axis).
    pub fn extent(&self) -> Vector3 {
        let mut lo = self.positions[0];
        let mut hi = self.positions[0];
        for p in &self.positions {
            for i in 0..3 {
                lo[i] = lo[i].min(p[i]);
                hi[i] = hi[i].max(p[i]);
            }
        }
        hi - lo
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self.positions.iter().fold(Vector3::zeros(), |a, p| a + p.coords);
        Point3::from(sum / self.positions.len() as f64)
    }

    /// Flattens several physical antennas into one monostatic path: entry
    /// `k · offsets.len() + a` sits at `position[k] + offsets[a]`. Timestamps
    /// are dropped because repeated times are not strictly increasing.
    pub fn with_antenna_offsets(&self, offsets: &[Vector3]) -> Result<Self> {
        if offsets.is_empty() {
            return Err(Error::domain("need at least one antenna offset"));
        }
        Self::new(
            self.positions
                .iter()
                .flat_map(|p| offsets.iter().map(move |o| p + o))
                .collect(),
        )
    }
}

/// Depth resolution `c / 2B`.
pub fn range_resolution(waveform: &Waveform) -> f64 {
    SPEED_OF_LIGHT / (2.0 * waveform.bandwidth)
}

/// Cross-range resolution `λ · z0 / 2D`.
pub fn cross_range_resolution(wavelength: f64, target_range: f64, aperture_extent: f64) -> Result<f64> {
    for (name, v) in [
        ("wavelength", wavelength),
        ("target range", target_range),
        ("aperture extent", aperture_extent),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(wavelength * target_range / (2.0 * aperture_extent))
}

/// Grid count along one side. The small slack absorbs float noise such as
/// 0.60 / 0.05 = 11.999999999999998.
fn grid_count(extent: f64, step: f64) -> usize {
    (extent / step + 1e-9).floor() as usize + 1
}

/// Rectangular grid of positions in the plane `z = center.z`, spanning
/// `width` along x and `height` along y, visited row by row in serpentine
/// order (even rows +x, odd rows −x).
pub fn make_planar_aperture(center: Point3, width: f64, height: f64, step: f64) -> Result<AperturePath> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::domain(format!("step must be positive, got {step}")));
    }
    if !(width >= step && height >= step) {
        return Err(Error::domain(format!(
            "width ({width}) and height ({height}) must be at least the step ({step})"
        )));
    }
    let nx = grid_count(width, step);
    let ny = grid_count(height, step);
    let x0 = center.x - (nx - 1) as f64 * step / 2.0;
    let y0 = center.y - (ny - 1) as f64 * step / 2.0;
    let mut positions = Vec::with_capacity(nx * ny);
    for row in 0..ny {
        let y = y0 + row as f64 * step;
        for i in 0..nx {
            let col = if row % 2 == 0 { i } else { nx - 1 - i };
            positions.push(Point3::new(x0 + col as f64 * step, y, center.z));
        }
    }
    AperturePath::new(positions)
}
