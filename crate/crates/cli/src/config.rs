//! Run configuration: one JSON file, overridable from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use mmsar_core::{AperturePath, Axis, Point3, ReflectionKind, ReflectionModel, TriangleMesh, VoxelGrid, Waveform};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Measurement positions: a serpentine planar scan or a JSON positions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ApertureSpec {
    Planar {
        center: [f64; 3],
        width: f64,
        height: f64,
        step: f64,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    /// Only `"auto"` is accepted.
    Keyword(String),
    Explicit(VoxelGrid),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Keyword("auto".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mesh_path: Option<PathBuf>,
    #[serde(default = "Waveform::band_77ghz")]
    pub waveform: Waveform,
    #[serde(default)]
    pub aperture: Option<ApertureSpec>,
    #[serde(default = "default_models")]
    pub models: Vec<ReflectionKind>,
    #[serde(default = "default_tau_deg")]
    pub tau_deg: f64,
    #[serde(default = "default_tau_e_deg")]
    pub tau_e_deg: f64,
    #[serde(default)]
    pub path_loss: bool,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "default_threshold_db")]
    pub threshold_db: f64,
    /// Defaults to twice the voxel spacing of the real volume.
    #[serde(default)]
    pub tau_f: Option<f64>,
    #[serde(default)]
    pub weight_grid: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_axis")]
    pub project_axis: Axis,
    #[serde(default = "default_prompt_count")]
    pub prompt_count: usize,
}

fn default_models() -> Vec<ReflectionKind> {
    vec![ReflectionKind::Specular, ReflectionKind::Edge]
}

fn default_tau_deg() -> f64 {
    mmsar_core::sim::DEFAULT_SPECULAR_THRESHOLD_DEG
}

fn default_tau_e_deg() -> f64 {
    mmsar_core::mesh::DEFAULT_EDGE_THRESHOLD_DEG
}

fn default_threshold_db() -> f64 {
    mmsar_core::eval::DEFAULT_THRESHOLD_DB
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_axis() -> Axis {
    Axis::Z
}

fn default_prompt_count() -> usize {
    5
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("every field has a default")
    }
}

/// Command-line values that replace config fields when present.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mesh: Option<PathBuf>,
    pub model: Option<ReflectionKind>,
    pub tau_deg: Option<f64>,
    pub tau_e_deg: Option<f64>,
    pub threshold_db: Option<f64>,
    pub tau_f: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub project_axis: Option<Axis>,
}

impl RunConfig {
    /// Reads `path`; relative paths inside the file are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        if !path.is_file() {
            return Err(CliError::Missing(format!("config file {} does not exist", path.display())));
        }
        let text = fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = cfg.mesh_path.as_mut() {
            rebase(m);
        }
        if let Some(ApertureSpec::File(f)) = cfg.aperture.as_mut() {
            rebase(f);
        }
        rebase(&mut cfg.out_dir);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = &o.mesh {
            self.mesh_path = Some(m.clone());
        }
        if let Some(k) = o.model {
            self.models = vec![k];
        }
        if let Some(v) = o.tau_deg {
            self.tau_deg = v;
        }
        if let Some(v) = o.tau_e_deg {
            self.tau_e_deg = v;
        }
        if let Some(v) = o.threshold_db {
            self.threshold_db = v;
        }
        if let Some(v) = o.tau_f {
            self.tau_f = Some(v);
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(a) = o.project_axis {
            self.project_axis = a;
        }
    }

    /// Checks that every referenced input file exists.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(m) = &self.mesh_path {
            require_file(m, "mesh")?;
        }
        if let Some(ApertureSpec::File(f)) = &self.aperture {
            require_file(f, "aperture")?;
        }
        if let GridSpec::Keyword(k) = &self.grid {
            if k != "auto" {
                return Err(CliError::Other(format!("grid must be \"auto\" or an explicit grid, got \"{k}\"")));
            }
        }
        Ok(())
    }

    pub fn reflection_model(&self, kind: ReflectionKind) -> Result<ReflectionModel, CliError> {
        Ok(ReflectionModel::new(kind, self.tau_deg.to_radians(), self.tau_e_deg.to_radians())?)
    }

    pub fn load_mesh(&self) -> Result<TriangleMesh, CliError> {
        let path = self
            .mesh_path
            .as_ref()
            .ok_or_else(|| CliError::Missing("no mesh given; pass --mesh or set mesh_path in the config".into()))?;
        require_file(path, "mesh")?;
        mmsar_core::load_mesh(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
    }

    /// The configured aperture, or a 0.2 m square scan with 1 cm steps
    /// centered 0.3 m above the mesh when none is configured.
    pub fn aperture(&self, mesh: Option<&TriangleMesh>) -> Result<AperturePath, CliError> {
        match &self.aperture {
            Some(ApertureSpec::Planar {
                center,
                width,
                height,
                step,
            }) => Ok(mmsar_core::make_planar_aperture(Point3::from(*center), *width, *height, *step)?),
            Some(ApertureSpec::File(path)) => {
                require_file(path, "aperture")?;
                let text = fs::read_to_string(path).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
            }
            None => {
                let mesh = mesh.ok_or_else(|| {
                    CliError::Missing("no aperture configured and no mesh to place a default one".into())
                })?;
                let (lo, hi) = mesh.bounding_box();
                let c = nalgebra::center(&lo, &hi);
                let center = Point3::new(c.x, c.y, hi.z + 0.3);
                Ok(mmsar_core::make_planar_aperture(center, 0.2, 0.2, 0.01)?)
            }
        }
    }

    /// Explicit grid, or one derived from the mesh bounds for `"auto"`.
    pub fn grid(&self, waveform: &Waveform, aperture: &AperturePath) -> Result<VoxelGrid, CliError> {
        match &self.grid {
            GridSpec::Explicit(g) => Ok(*g),
            GridSpec::Keyword(_) => {
                if self.mesh_path.is_none() {
                    return Err(CliError::Missing(
                        "an \"auto\" grid needs a mesh; pass --mesh or give an explicit grid".into(),
                    ));
                }
                let (lo, hi) = self.load_mesh()?.bounding_box();
                Ok(VoxelGrid::auto(lo, hi, waveform, aperture)?)
            }
        }
    }

    pub fn weight_grid(&self) -> Vec<(f64, f64)> {
        self.weight_grid.clone().unwrap_or_else(mmsar_core::default_weight_grid)
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Missing(format!("{what} file {} does not exist", path.display())))
    }
}
