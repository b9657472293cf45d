//! Raw-signal synthesis from triangle meshes and weighted image combination.
//!
//! Every kept vertex contributes a unit phasor `exp(−j·4π·r/λ_j)` per sample,
//! where `r` is the sensor-to-vertex distance. Which vertices are kept depends
//! on the [`ReflectionModel`]: all visible vertices (full), visible vertices
//! whose normal lies within `tau` of the direction to the sensor (specular),
//! or visible edge vertices (edge).

use std::f64::consts::PI;

use num_complex::{Complex32, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageVolume;
use crate::mesh::{compute_edge_vertices, TriangleMesh, VisibilityIndex, DEFAULT_EDGE_THRESHOLD_DEG};
use crate::radar::{AperturePath, Waveform};
use crate::Point3;

/// Default specular acceptance angle, degrees.
pub const DEFAULT_SPECULAR_THRESHOLD_DEG: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionKind {
    Full,
    Specular,
    Edge,
}

impl ReflectionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReflectionKind::Full => "full",
            ReflectionKind::Specular => "specular",
            ReflectionKind::Edge => "edge",
        }
    }
}

impl std::str::FromStr for ReflectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(ReflectionKind::Full),
            "specular" => Ok(ReflectionKind::Specular),
            "edge" => Ok(ReflectionKind::Edge),
            other => Err(Error::domain(format!("unknown reflection model `{other}`"))),
        }
    }
}

/// Reflection model with its thresholds in radians. `tau` is only read by
/// the specular model and `tau_e` only by the edge model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ReflectionModel {
    pub kind: ReflectionKind,
    pub tau: f64,
    pub tau_e: f64,
}

#[derive(Deserialize)]
struct RawModel {
    kind: ReflectionKind,
    #[serde(default = "default_tau")]
    tau: f64,
    #[serde(default = "default_tau_e")]
    tau_e: f64,
}

fn default_tau() -> f64 {
    DEFAULT_SPECULAR_THRESHOLD_DEG.to_radians()
}

fn default_tau_e() -> f64 {
    DEFAULT_EDGE_THRESHOLD_DEG.to_radians()
}

impl TryFrom<RawModel> for ReflectionModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        ReflectionModel::new(r.kind, r.tau, r.tau_e)
    }
}

impl ReflectionModel {
    /// `tau` must lie in (0, π] and `tau_e` in (0, π).
    pub fn new(kind: ReflectionKind, tau: f64, tau_e: f64) -> Result<Self> {
        if !(tau > 0.0 && tau <= PI) {
            return Err(Error::domain(format!("specular threshold must be in (0, π], got {tau}")));
        }
        if !(tau_e > 0.0 && tau_e < PI) {
            return Err(Error::domain(format!("edge threshold must be in (0, π), got {tau_e}")));
        }
        Ok(Self { kind, tau, tau_e })
    }

    pub fn full() -> Self {
        Self {
            kind: ReflectionKind::Full,
            tau: default_tau(),
            tau_e: default_tau_e(),
        }
    }

    pub fn specular(tau: f64) -> Result<Self> {
        Self::new(ReflectionKind::Specular, tau, default_tau_e())
    }

    pub fn edge(tau_e: f64) -> Result<Self> {
        Self::new(ReflectionKind::Edge, default_tau(), tau_e)
    }

    pub fn with_kind(self, kind: ReflectionKind) -> Self {
        Self { kind, ..self }
    }
}

impl Default for ReflectionModel {
    fn default() -> Self {
        Self::full()
    }
}

/// K × N complex samples, stored k-major (`samples[k * N + j]`).
#[derive(Debug, Clone, PartialEq)]
pub struct RawSignalSet {
    samples: Vec<Complex64>,
    aperture: AperturePath,
    waveform: Waveform,
}

impl RawSignalSet {
    pub fn new(samples: Vec<Complex64>, aperture: AperturePath, waveform: Waveform) -> Result<Self> {
        let expected = aperture.len() * waveform.num_samples;
        if samples.len() != expected {
            return Err(Error::Dimension(format!(
                "{} samples for K = {} positions × N = {}",
                samples.len(),
                aperture.len(),
                waveform.num_samples
            )));
        }
        if samples.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(Error::domain("signal samples must be finite"));
        }
        Ok(Self {
            samples,
            aperture,
            waveform,
        })
    }

    pub fn zeros(aperture: AperturePath, waveform: Waveform) -> Self {
        let n = aperture.len() * waveform.num_samples;
        Self {
            samples: vec![Complex64::new(0.0, 0.0); n],
            aperture,
            waveform,
        }
    }

    /// Number of measurement positions (K).
    pub fn num_positions(&self) -> usize {
        self.aperture.len()
    }

    /// Samples per position (N).
    pub fn num_samples(&self) -> usize {
        self.waveform.num_samples
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        let n = self.num_samples();
        &self.samples[k * n..(k + 1) * n]
    }

    pub fn aperture(&self) -> &AperturePath {
        &self.aperture
    }

    pub fn waveform(&self) -> &Waveform {
        &self.waveform
    }

    /// Element-wise sum; both sets must share aperture and waveform.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            samples: self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.num_positions() != other.num_positions() || self.num_samples() != other.num_samples() {
            return Err(Error::Alignment(format!(
                "signal shapes differ: {}×{} vs {}×{}",
                self.num_positions(),
                self.num_samples(),
                other.num_positions(),
                other.num_samples()
            )));
        }
        if self.waveform != other.waveform {
            return Err(Error::Alignment("signal sets use different waveforms".into()));
        }
        Ok(())
    }

    pub(crate) fn map_samples(&self, f: impl Fn(usize, Complex64) -> Complex64) -> Self {
        Self {
            samples: self.samples.iter().enumerate().map(|(i, s)| f(i, *s)).collect(),
            ..self.clone()
        }
    }
}

/// Round-trip phase `−4π·r/λ` for a reflector at distance `r`.
#[inline]
pub(crate) fn reflection_phase(distance: f64, wavelength: f64) -> f64 {
    -4.0 * PI * distance / wavelength
}

/// Reflection of a single vertex as seen from `sensor` at sample `j`: a unit
/// phasor with phase `−4π·|sensor − vertex| / λ_j`.
pub fn simulate_vertex_reflection(
    sensor: &Point3,
    vertex: &Point3,
    waveform: &Waveform,
    sample_index: usize,
) -> Result<Complex64> {
    if sample_index >= waveform.num_samples {
        return Err(Error::domain(format!(
            "sample index {sample_index} out of range for N = {}",
            waveform.num_samples
        )));
    }
    let r = (sensor - vertex).norm();
    if r == 0.0 {
        return Err(Error::domain("sensor and vertex coincide"));
    }
    Ok(Complex64::from_polar(1.0, reflection_phase(r, waveform.wavelength_at(sample_index))))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    /// Scale each contribution by `1/r²`. Off by default.
    #[serde(default)]
    pub path_loss: bool,
}

/// Signals for `model` with default options (unit amplitude, no path loss).
pub fn simulate_signals(
    mesh: &TriangleMesh,
    aperture: &AperturePath,
    waveform: &Waveform,
    model: &ReflectionModel,
) -> Result<RawSignalSet> {
    simulate_signals_with(mesh, aperture, waveform, model, SimulationOptions::default())
}

pub fn simulate_signals_with(
    mesh: &TriangleMesh,
    aperture: &AperturePath,
    waveform: &Waveform,
    model: &ReflectionModel,
    options: SimulationOptions,
) -> Result<RawSignalSet> {
    let gate = VertexGate::new(mesh, model);
    let wavelengths = waveform.wavelengths();
    let rows: Vec<Result<Vec<Complex64>>> = aperture
        .positions()
        .par_iter()
        .map(|sensor| {
            let kept = gate.kept_vertices(sensor);
            synthesize_row(sensor, kept.iter().map(|&v| &mesh.vertices()[v]), &wavelengths, options)
        })
        .collect();
    let mut samples = Vec::with_capacity(aperture.len() * waveform.num_samples);
    for row in rows {
        samples.extend(row?);
    }
    RawSignalSet::new(samples, aperture.clone(), *waveform)
}

/// Full-model signals from isolated point reflectors (no occlusion).
pub fn simulate_point_targets(
    points: &[Point3],
    aperture: &AperturePath,
    waveform: &Waveform,
) -> Result<RawSignalSet> {
    let wavelengths = waveform.wavelengths();
    let rows: Vec<Result<Vec<Complex64>>> = aperture
        .positions()
        .par_iter()
        .map(|s| synthesize_row(s, points.iter(), &wavelengths, SimulationOptions::default()))
        .collect();
    let mut samples = Vec::with_capacity(aperture.len() * waveform.num_samples);
    for row in rows {
        samples.extend(row?);
    }
    RawSignalSet::new(samples, aperture.clone(), *waveform)
}

/// Sums contributions in iteration order, which callers keep fixed.
fn synthesize_row<'p>(
    sensor: &Point3,
    points: impl Iterator<Item = &'p Point3>,
    wavelengths: &[f64],
    options: SimulationOptions,
) -> Result<Vec<Complex64>> {
    let mut row = vec![Complex64::new(0.0, 0.0); wavelengths.len()];
    for p in points {
        let r = (sensor - p).norm();
        if r == 0.0 {
            return Err(Error::domain(format!("sensor coincides with reflector at {p}")));
        }
        let amp = if options.path_loss { 1.0 / (r * r) } else { 1.0 };
        for (acc, &lambda) in row.iter_mut().zip(wavelengths) {
            *acc += Complex64::from_polar(amp, reflection_phase(r, lambda));
        }
    }
    Ok(row)
}

/// Visibility plus reflection-model gating for one mesh.
pub struct VertexGate<'a> {
    index: VisibilityIndex<'a>,
    model: ReflectionModel,
    edge_mask: Option<Vec<bool>>,
}

impl<'a> VertexGate<'a> {
    pub fn new(mesh: &'a TriangleMesh, model: &ReflectionModel) -> Self {
        let edge_mask = (model.kind == ReflectionKind::Edge)
            .then(|| compute_edge_vertices(mesh, model.tau_e).mask(mesh.vertex_count()));
        Self {
            index: VisibilityIndex::new(mesh),
            model: *model,
            edge_mask,
        }
    }

    /// Sorted indices of vertices that reflect toward `sensor`.
    pub fn kept_vertices(&self, sensor: &Point3) -> Vec<usize> {
        let mesh = self.index.mesh();
        self.index
            .visible_vertices(sensor)
            .into_iter()
            .filter(|&v| match self.model.kind {
                ReflectionKind::Full => true,
                ReflectionKind::Specular => {
                    let n = mesh.vertex_normals()[v];
                    let to_sensor = sensor - mesh.vertices()[v];
                    let cos = n.dot(&to_sensor) / (n.norm() * to_sensor.norm());
                    cos.clamp(-1.0, 1.0).acos() < self.model.tau
                }
                ReflectionKind::Edge => self.edge_mask.as_ref().is_some_and(|m| m[v]),
            })
            .collect()
    }
}

/// Convex combination `w1·specular + w2·edge` with `w1 = α1/(α1+α2)`.
pub fn combine_images(
    image_specular: &ImageVolume,
    image_edge: &ImageVolume,
    alpha1: f64,
    alpha2: f64,
) -> Result<ImageVolume> {
    if !image_specular.grid().same_as(image_edge.grid()) {
        return Err(Error::Dimension(format!(
            "image grids differ: {:?} vs {:?}",
            image_specular.grid(),
            image_edge.grid()
        )));
    }
    if !(alpha1 >= 0.0 && alpha2 >= 0.0 && alpha1.is_finite() && alpha2.is_finite()) {
        return Err(Error::domain(format!("weights must be finite and nonnegative, got ({alpha1}, {alpha2})")));
    }
    let total = alpha1 + alpha2;
    if total == 0.0 {
        return Err(Error::domain("weights (0, 0) are not allowed"));
    }
    // a zero weight returns the other image untouched (keeps signed zeros)
    if alpha2 == 0.0 {
        return Ok(image_specular.clone());
    }
    if alpha1 == 0.0 {
        return Ok(image_edge.clone());
    }
    let (w1, w2) = (alpha1 / total, alpha2 / total);
    let values = image_specular
        .values()
        .iter()
        .zip(image_edge.values())
        .map(|(s, e)| {
            let re = w1 * s.re as f64 + w2 * e.re as f64;
            let im = w1 * s.im as f64 + w2 * e.im as f64;
            Complex32::new(re as f32, im as f32)
        })
        .collect();
    ImageVolume::new(*image_specular.grid(), values)
}

/// Draws `(α1, α2)` uniformly from `[0, 1]²` minus the origin and combines.
pub fn sample_combined_image(
    image_specular: &ImageVolume,
    image_edge: &ImageVolume,
    seed: u64,
) -> Result<(ImageVolume, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a1, a2) = loop {
        let a1: f64 = rng.random_range(0.0..=1.0);
        let a2: f64 = rng.random_range(0.0..=1.0);
        if a1 + a2 > 0.0 {
            break (a1, a2);
        }
    };
    let image = combine_images(image_specular, image_edge, a1, a2)?;
    Ok((image, a1, a2))
}
