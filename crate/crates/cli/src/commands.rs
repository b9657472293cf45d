//! Subcommand implementations. Each writes its results under the output
//! directory and logs a short summary to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use mmsar_core::eval::{default_tau_f, weight_sweep};
use mmsar_core::formats::{read_msig, read_mvol, write_cloud_ply, write_msig, write_mvol, write_png, write_projection_f32};
use mmsar_core::imaging::{image_with_background, theoretical_resolution};
use mmsar_core::rng::substream_seed;
use mmsar_core::sim::{simulate_signals_with, SimulationOptions};
use mmsar_core::{backproject, colorize, project_2d, select_prompt_points, Axis, ImageVolume};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::CliError;

fn require_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Missing(format!("input file {} does not exist", path.display())))
    }
}

fn out_path(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| CliError::Other(format!("{}: {e}", cfg.out_dir.display())))?;
    Ok(cfg.out_dir.join(name))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "volume".into())
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let mesh = cfg.load_mesh()?;
    let aperture = cfg.aperture(Some(&mesh))?;
    let options = SimulationOptions {
        path_loss: cfg.path_loss,
    };
    for &kind in &cfg.models {
        let start = Instant::now();
        let model = cfg.reflection_model(kind)?;
        let signals = simulate_signals_with(&mesh, &aperture, &cfg.waveform, &model, options)?;
        let path = out_path(cfg, &format!("signals_{}.msig", kind.as_str()))?;
        write_msig(&signals, &path)?;
        info!(
            "{} model: K = {}, N = {}, {:.2} s -> {}",
            kind.as_str(),
            signals.num_positions(),
            signals.num_samples(),
            start.elapsed().as_secs_f64(),
            path.display()
        );
    }
    Ok(())
}

pub fn image(cfg: &RunConfig, signals_path: &Path, background: Option<&Path>) -> Result<(), CliError> {
    require_input(signals_path)?;
    let start = Instant::now();
    let signals = read_msig(signals_path)?;
    let grid = cfg.grid(signals.waveform(), signals.aperture())?;
    let volume = match background {
        Some(bg) => {
            require_input(bg)?;
            image_with_background(&signals, &read_msig(bg)?, &grid)?
        }
        None => backproject(&signals, &grid),
    };
    let name = stem(signals_path);
    let path = out_path(cfg, &format!("{name}.mvol"))?;
    write_mvol(&volume, &path)?;
    let (peak, magnitude) = volume.peak();
    info!(
        "imaged {} voxels ({:?}) in {:.2} s; peak {:.4e} at {} -> {}",
        grid.len(),
        grid.dims,
        start.elapsed().as_secs_f64(),
        magnitude,
        grid.voxel_center(peak),
        path.display()
    );
    write_projection(cfg, &volume, &name)
}

fn write_projection(cfg: &RunConfig, volume: &ImageVolume, name: &str) -> Result<(), CliError> {
    let axis = cfg.project_axis;
    let tag = format!("{name}_{}", axis_name(axis));
    let proj = project_2d(volume, axis);
    write_projection_f32(&proj, out_path(cfg, &format!("{tag}.f32"))?)?;
    write_png(&colorize(&proj), out_path(cfg, &format!("{tag}.png"))?)?;
    write_json(
        &out_path(cfg, &format!("{tag}.json"))?,
        &json!({
            "depth_axis": axis_name(axis),
            "width": proj.width,
            "height": proj.height,
            "origin": proj.origin,
            "spacing": proj.spacing,
            "peak": proj.peak(),
        }),
    )?;
    info!("projection along {} -> {}x{} {tag}.png", axis_name(axis), proj.width, proj.height);
    Ok(())
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::X => "x",
        Axis::Y => "y",
        Axis::Z => "z",
    }
}

pub fn eval(cfg: &RunConfig, real: &Path, specular: &Path, edge: &Path) -> Result<(), CliError> {
    for p in [real, specular, edge] {
        require_input(p)?;
    }
    let start = Instant::now();
    let real = read_mvol(real)?;
    let is = read_mvol(specular)?;
    let ie = read_mvol(edge)?;
    let tau_f = cfg.tau_f.unwrap_or_else(|| default_tau_f(&real));
    let sweep = weight_sweep(&real, &is, &ie, &cfg.weight_grid(), tau_f, cfg.threshold_db)?;
    write_json(&out_path(cfg, "report.json")?, &sweep.best)?;
    write_json(&out_path(cfg, "sweep.json")?, &sweep.scores)?;
    write_cloud_ply(&sweep.real_cloud, out_path(cfg, "real_cloud.ply")?)?;
    write_cloud_ply(&sweep.best_aligned, out_path(cfg, "synthetic_aligned.ply")?)?;
    let b = &sweep.best;
    info!(
        "F = {:.4} (precision {:.4}, recall {:.4}) at weights ({}, {}), tau_f = {:.4e} m, {:.2} s",
        b.fscore,
        b.precision,
        b.recall,
        b.best_alpha1.unwrap_or(f64::NAN),
        b.best_alpha2.unwrap_or(f64::NAN),
        tau_f,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn project(cfg: &RunConfig, volume_path: &Path) -> Result<(), CliError> {
    require_input(volume_path)?;
    let volume = read_mvol(volume_path)?;
    write_projection(cfg, &volume, &stem(volume_path))
}

pub fn prompts(cfg: &RunConfig, primary: &Path, secondary: Option<&Path>) -> Result<(), CliError> {
    require_input(primary)?;
    let primary = read_mvol(primary)?;
    let secondary = match secondary {
        Some(p) => {
            require_input(p)?;
            Some(read_mvol(p)?)
        }
        None => None,
    };
    let seed = substream_seed(cfg.seed, "prompts");
    let points = select_prompt_points(
        &primary,
        secondary.as_ref(),
        cfg.project_axis,
        cfg.threshold_db,
        cfg.prompt_count,
        seed,
    )?;
    let path = out_path(cfg, "prompts.json")?;
    write_json(
        &path,
        &json!({
            "depth_axis": axis_name(cfg.project_axis),
            "threshold_db": cfg.threshold_db,
            "points": points,
        }),
    )?;
    info!("{} prompt points -> {}", points.len(), path.display());
    Ok(())
}

/// Prints theoretical resolutions (and mesh diagnostics when a mesh is
/// configured) as JSON on stdout.
pub fn info(cfg: &RunConfig) -> Result<(), CliError> {
    let mesh = match &cfg.mesh_path {
        Some(_) => Some(cfg.load_mesh()?),
        None => None,
    };
    let aperture = cfg.aperture(mesh.as_ref())?;
    let target = match &mesh {
        Some(m) => {
            let (lo, hi) = m.bounding_box();
            nalgebra::center(&lo, &hi)
        }
        None => aperture.centroid() - nalgebra::Vector3::new(0.0, 0.0, 0.3),
    };
    let res = theoretical_resolution(&cfg.waveform, &aperture, &target)?;
    let extent = aperture.extent();
    let finite = |v: f64| if v.is_finite() { Some(v) } else { None };
    let report = json!({
        "waveform": cfg.waveform,
        "center_wavelength": cfg.waveform.center_wavelength(),
        "positions": aperture.len(),
        "aperture_extent": [extent.x, extent.y, extent.z],
        "target": [target.x, target.y, target.z],
        "target_range": (target - aperture.centroid()).norm(),
        "range_resolution": res[2],
        "cross_range_resolution": [finite(res[0]), finite(res[1])],
        "mesh": mesh.as_ref().map(|m| m.validate()),
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?);
    Ok(())
}
