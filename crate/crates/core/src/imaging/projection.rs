//! 2D projection, colorization and prompt-point selection.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ImageVolume;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// The two remaining axes, in (u, v) order.
    pub fn remaining(self) -> [usize; 2] {
        match self {
            Axis::X => [1, 2],
            Axis::Y => [0, 2],
            Axis::Z => [0, 1],
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::domain(format!("unknown axis `{other}`"))),
        }
    }
}

/// Real 2D grid with `u` fastest: `values[u + width · v]`. Keeps the physical
/// placement of its pixels so two projections can be resampled onto each
/// other.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection2d {
    pub width: usize,
    pub height: usize,
    /// Physical coordinate of pixel (0, 0) along u and v.
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub values: Vec<f64>,
}

impl Projection2d {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[u + self.width * v]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    fn same_lattice(&self, other: &Projection2d) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.origin == other.origin
            && self.spacing == other.spacing
    }

    /// Nearest-neighbor resampling onto `target`'s lattice; pixels outside
    /// this projection read as 0.
    pub fn resample_to(&self, target: &Projection2d) -> Projection2d {
        if self.same_lattice(target) {
            return self.clone();
        }
        let pick = |axis: usize, i: usize, n: usize| -> Option<usize> {
            let x = target.origin[axis] + i as f64 * target.spacing[axis];
            let f = ((x - self.origin[axis]) / self.spacing[axis]).round();
            (f >= 0.0 && f < n as f64).then_some(f as usize)
        };
        let mut values = Vec::with_capacity(target.width * target.height);
        for v in 0..target.height {
            for u in 0..target.width {
                values.push(match (pick(0, u, self.width), pick(1, v, self.height)) {
                    (Some(a), Some(b)) => self.get(a, b),
                    _ => 0.0,
                });
            }
        }
        Projection2d {
            values,
            ..target.clone()
        }
    }
}

/// Mean voxel magnitude along `depth_axis`.
pub fn project_2d(volume: &ImageVolume, depth_axis: Axis) -> Projection2d {
    let g = volume.grid();
    let d = depth_axis.index();
    let [ua, va] = depth_axis.remaining();
    let (nu, nv, nd) = (g.dims[ua], g.dims[va], g.dims[d]);
    let mut values = vec![0.0; nu * nv];
    for v in 0..nv {
        for u in 0..nu {
            let mut sum = 0.0;
            for w in 0..nd {
                let mut c = [0usize; 3];
                c[ua] = u;
                c[va] = v;
                c[d] = w;
                sum += volume.magnitude(g.index(c[0], c[1], c[2]));
            }
            values[u + nu * v] = sum / nd as f64;
        }
    }
    Projection2d {
        width: nu,
        height: nv,
        origin: [g.origin[ua], g.origin[va]],
        spacing: [g.spacing[ua], g.spacing[va]],
        values,
    }
}

/// 8-bit RGB image, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbRaster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

impl RgbRaster {
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[x + self.width * y]
    }
}

/// 256-entry rainbow colormap: HSV hue sweeping from 240° (blue) at index 0
/// to 0° (red) at index 255, full saturation and value.
pub fn rainbow_lut() -> [[u8; 3]; 256] {
    let mut lut = [[0u8; 3]; 256];
    for (i, entry) in lut.iter_mut().enumerate() {
        let hue = 240.0 * (1.0 - i as f64 / 255.0) / 60.0;
        let sector = (hue.floor() as usize).min(3);
        let f = hue - sector as f64;
        let up = (255.0 * f).round() as u8;
        let down = (255.0 * (1.0 - f)).round() as u8;
        *entry = match sector {
            0 => [255, up, 0],   // red -> yellow
            1 => [down, 255, 0], // yellow -> green
            2 => [0, 255, up],   // green -> cyan
            _ => [0, down, 255], // cyan -> blue
        };
    }
    lut
}

/// Min–max normalizes and maps through [`rainbow_lut`]. Image row 0 is the
/// largest `v`, so +v points up. Constant input maps to LUT entry 0.
pub fn colorize(image: &Projection2d) -> RgbRaster {
    let lut = rainbow_lut();
    let lo = image.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = image.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    let mut pixels = Vec::with_capacity(image.values.len());
    for row in 0..image.height {
        let v = image.height - 1 - row;
        for u in 0..image.width {
            let t = if range > 0.0 { (image.get(u, v) - lo) / range } else { 0.0 };
            pixels.push(lut[(t * 255.0).round().clamp(0.0, 255.0) as usize]);
        }
    }
    RgbRaster {
        width: image.width,
        height: image.height,
        pixels,
    }
}

fn db_floor(peak: f64, threshold_db: f64) -> f64 {
    peak * 10f64.powf(-threshold_db / 20.0)
}

/// Picks up to `count` prompt pixels `[u, v]` among those whose projected
/// magnitude is within `threshold_db` of the projection's peak. With a
/// `secondary` volume, a pixel must also pass the same test in the
/// secondary projection (resampled onto the primary's lattice). Selection
/// is uniform without replacement and reproducible per `seed`.
pub fn select_prompt_points(
    primary: &ImageVolume,
    secondary: Option<&ImageVolume>,
    depth_axis: Axis,
    threshold_db: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<[usize; 2]>> {
    if count == 0 {
        return Err(Error::domain("prompt count must be at least 1"));
    }
    if !(threshold_db.is_finite() && threshold_db >= 0.0) {
        return Err(Error::domain(format!("threshold must be a nonnegative dB value, got {threshold_db}")));
    }
    let main = project_2d(primary, depth_axis);
    let other = secondary.map(|s| project_2d(s, depth_axis).resample_to(&main));
    let passes = |p: &Projection2d, i: usize| {
        let peak = p.peak();
        peak > 0.0 && p.values[i] >= db_floor(peak, threshold_db)
    };
    let candidates: Vec<usize> = (0..main.values.len())
        .filter(|&i| passes(&main, i) && other.as_ref().is_none_or(|o| passes(o, i)))
        .collect();
    let amount = count.min(candidates.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, candidates.len(), amount)
        .into_iter()
        .map(|i| {
            let c = candidates[i];
            [c % main.width, c / main.width]
        })
        .collect())
}
