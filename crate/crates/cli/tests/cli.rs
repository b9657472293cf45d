use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmsar_core::formats::{read_msig, read_mvol, write_mvol};
use mmsar_core::mesh::primitives::unit_cube;
use mmsar_core::mesh::save_obj;
use mmsar_core::{Complex32, ImageVolume, Point3, TriangleMesh, Vector3, VoxelGrid, SPEED_OF_LIGHT};
use serde_json::{json, Value};
use tempfile::TempDir;

fn mmsar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmsar"))
        .current_dir(dir)
        .env_remove("MMSAR_THREADS")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(&value).unwrap()).unwrap();
    path
}

fn small_cube(dir: &Path) -> PathBuf {
    let path = dir.join("cube.obj");
    save_obj(&unit_cube(2).scaled(0.05), &path).unwrap();
    path
}

#[test]
fn simulate_writes_expected_shape_and_is_repeatable() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_cube(dir);
    // 10 x 6 positions
    write_config(
        dir,
        "run.json",
        json!({
            "mesh_path": "cube.obj",
            "aperture": {"planar": {"center": [0, 0, 0.3], "width": 0.09, "height": 0.05, "step": 0.01}},
            "models": ["full"],
            "out_dir": "first"
        }),
    );
    let o = mmsar(dir, &["simulate", "--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = read_msig(dir.join("first/signals_full.msig")).unwrap();
    assert_eq!((s.num_positions(), s.num_samples()), (60, 256));
    assert!(stderr(&o).contains("K = 60, N = 256"));

    let o = mmsar(dir, &["simulate", "--config", "run.json", "--out-dir", "second", "--threads", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(dir.join("first/signals_full.msig")).unwrap(),
        fs::read(dir.join("second/signals_full.msig")).unwrap()
    );
}

#[test]
fn missing_mesh_exits_with_code_2() {
    let tmp = TempDir::new().unwrap();
    let o = mmsar(tmp.path(), &["simulate", "--mesh", "nowhere/teapot.obj"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere/teapot.obj"));

    let o = mmsar(tmp.path(), &["simulate", "--config", "absent.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.json"));
}

fn point_like_mesh(dir: &Path, at: Point3) -> PathBuf {
    let d = 1e-5;
    let mesh = TriangleMesh::new(
        vec![at, at + Vector3::new(d, 0.0, 0.0), at + Vector3::new(0.0, d, 0.0)],
        vec![[0, 1, 2]],
    )
    .unwrap();
    let path = dir.join("speck.obj");
    save_obj(&mesh, &path).unwrap();
    path
}

#[test]
fn image_peaks_at_point_target_and_background_cancels() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let target = Point3::new(0.004, -0.006, 0.0);
    point_like_mesh(dir, target);
    let spacing = 0.002;
    write_config(
        dir,
        "run.json",
        json!({
            "mesh_path": "speck.obj",
            "waveform": {"start_frequency": 77e9, "bandwidth": 4e9, "num_samples": 64},
            "aperture": {"planar": {"center": [0, 0, 0.2], "width": 0.2, "height": 0.2, "step": 0.01}},
            "models": ["full"],
            "grid": {"origin": [-0.02, -0.02, -0.01], "spacing": [spacing, spacing, spacing], "dims": [21, 21, 11]}
        }),
    );
    assert!(mmsar(dir, &["simulate", "--config", "run.json"]).status.success());
    let o = mmsar(dir, &["image", "out/signals_full.msig", "--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vol = read_mvol(dir.join("out/signals_full.mvol")).unwrap();
    let (peak, _) = vol.peak();
    let offset = vol.grid().voxel_center(peak) - target;
    assert!(offset.abs().max() <= spacing + 1e-12, "peak offset {offset}");
    for ext in ["f32", "png", "json"] {
        assert!(dir.join(format!("out/signals_full_z.{ext}")).is_file());
    }

    let o = mmsar(
        dir,
        &["image", "out/signals_full.msig", "--config", "run.json", "--background", "out/signals_full.msig", "--out-dir", "bg"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let zero = read_mvol(dir.join("bg/signals_full.mvol")).unwrap();
    assert!(zero.values().iter().all(|v| v.re == 0.0 && v.im == 0.0));
}

#[test]
fn auto_grid_without_mesh_is_reported() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    point_like_mesh(dir, Point3::origin());
    write_config(
        dir,
        "run.json",
        json!({
            "mesh_path": "speck.obj",
            "waveform": {"start_frequency": 77e9, "bandwidth": 4e9, "num_samples": 8},
            "aperture": {"planar": {"center": [0, 0, 0.2], "width": 0.02, "height": 0.02, "step": 0.01}},
            "models": ["full"]
        }),
    );
    assert!(mmsar(dir, &["simulate", "--config", "run.json"]).status.success());
    let o = mmsar(dir, &["image", "out/signals_full.msig"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("auto"));
}

fn png_size(path: &Path) -> (u32, u32) {
    let bytes = fs::read(path).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let w = u32::from_be_bytes(bytes[16..20].try_into().unwrap());
    let h = u32::from_be_bytes(bytes[20..24].try_into().unwrap());
    (w, h)
}

#[test]
fn projection_png_matches_volume_shape() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let grid = VoxelGrid::new(Point3::origin(), Vector3::repeat(0.01), [7, 4, 1]).unwrap();
    let values = (0..grid.len()).map(|i| Complex32::new(i as f32, 0.0)).collect();
    write_mvol(&ImageVolume::new(grid, values).unwrap(), dir.join("flat.mvol")).unwrap();
    let o = mmsar(dir, &["project", "flat.mvol", "--project-axis", "z"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(png_size(&dir.join("out/flat_z.png")), (7, 4));
    assert_eq!(fs::read(dir.join("out/flat_z.f32")).unwrap().len(), 7 * 4 * 4);
    let o = mmsar(dir, &["project", "flat.mvol", "--project-axis", "x"]);
    assert!(o.status.success());
    assert_eq!(png_size(&dir.join("out/flat_x.png")), (4, 1));
}

/// Specular: a faint 10-voxel line. Edge: a bright 3x3 plate elsewhere, so any
/// nonzero edge weight shows up in the thresholded cloud.
fn eval_volumes(dir: &Path) -> VoxelGrid {
    let grid = VoxelGrid::new(Point3::origin(), Vector3::repeat(0.01), [12, 12, 6]).unwrap();
    let mut spec = vec![Complex32::new(0.0, 0.0); grid.len()];
    let mut edge = spec.clone();
    for i in 1..11 {
        spec[grid.index(i, 2, 2)] = Complex32::new(1.0, 0.0);
    }
    for i in 7..10 {
        for j in 7..10 {
            edge[grid.index(i, j, 4)] = Complex32::new(0.0, 100.0);
        }
    }
    write_mvol(&ImageVolume::new(grid, spec).unwrap(), dir.join("spec.mvol")).unwrap();
    write_mvol(&ImageVolume::new(grid, edge).unwrap(), dir.join("edge.mvol")).unwrap();
    fs::copy(dir.join("spec.mvol"), dir.join("real.mvol")).unwrap();
    grid
}

#[test]
fn eval_self_comparison_report() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    eval_volumes(dir);
    let o = mmsar(dir, &["eval", "real.mvol", "spec.mvol", "edge.mvol"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
    let obj = report.as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["alpha1", "alpha2", "fscore", "precision", "recall", "tau_f"]);
    assert!(obj.values().all(Value::is_number));
    assert_eq!(report["fscore"], 1.0);
    assert_eq!((report["alpha1"].as_f64(), report["alpha2"].as_f64()), (Some(1.0), Some(0.0)));
    assert!((report["tau_f"].as_f64().unwrap() - 0.02).abs() < 1e-15);
    assert!(dir.join("out/real_cloud.ply").is_file());
    assert!(dir.join("out/synthetic_aligned.ply").is_file());
}

#[test]
fn eval_singleton_grid_echoes_weights() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    eval_volumes(dir);
    write_config(dir, "run.json", json!({"weight_grid": [[0.3, 0.6]], "out_dir": "single"}));
    let o = mmsar(dir, &["eval", "real.mvol", "spec.mvol", "edge.mvol", "--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("single/report.json")).unwrap()).unwrap();
    assert_eq!((report["alpha1"].as_f64(), report["alpha2"].as_f64()), (Some(0.3), Some(0.6)));
}

#[test]
fn eval_empty_cloud_exits_with_code_3() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let grid = eval_volumes(dir);
    write_mvol(&ImageVolume::zeros(grid), dir.join("real.mvol")).unwrap();
    let o = mmsar(dir, &["eval", "real.mvol", "spec.mvol", "edge.mvol"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("threshold"));
}

#[test]
fn malformed_msig_is_a_parse_error() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("junk.msig"), b"MSIGnope").unwrap();
    let o = mmsar(tmp.path(), &["image", "junk.msig"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("junk.msig"));
}

#[test]
fn info_reports_resolutions() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_cube(dir);
    write_config(
        dir,
        "run.json",
        json!({
            "mesh_path": "cube.obj",
            "waveform": {"start_frequency": 24e9, "bandwidth": 0.25e9, "num_samples": 256},
            "aperture": {"planar": {"center": [0, 0, 0.5], "width": 0.4, "height": 0.2, "step": 0.05}}
        }),
    );
    let o = mmsar(dir, &["info", "--config", "run.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let dz = v["range_resolution"].as_f64().unwrap();
    assert!((dz - SPEED_OF_LIGHT / (2.0 * 0.25e9)).abs() < 1e-12);
    let lambda = SPEED_OF_LIGHT / (24e9 + 0.125e9);
    let dx = v["cross_range_resolution"][0].as_f64().unwrap();
    assert!((dx - lambda * 0.5 / (2.0 * 0.4)).abs() < 1e-12);
    assert_eq!(v["mesh"]["face_count"], 48);
}

#[test]
fn prompts_are_deterministic_per_seed() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    let grid = VoxelGrid::new(Point3::origin(), Vector3::repeat(0.01), [16, 16, 2]).unwrap();
    let values = (0..grid.len()).map(|i| Complex32::new(1.0 + (i % 5) as f32, 0.0)).collect();
    write_mvol(&ImageVolume::new(grid, values).unwrap(), dir.join("v.mvol")).unwrap();
    let run = |out: &str, seed: &str| {
        let o = mmsar(dir, &["prompts", "v.mvol", "--count", "6", "--seed", seed, "--threshold-db", "20", "--out-dir", out]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.join(out).join("prompts.json")).unwrap()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 6);
}

#[test]
fn pipeline_self_evaluation_scores_one() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    small_cube(dir);
    write_config(
        dir,
        "run.json",
        json!({
            "mesh_path": "cube.obj",
            "waveform": {"start_frequency": 77e9, "bandwidth": 4e9, "num_samples": 16},
            "aperture": {"planar": {"center": [0, 0, 0.3], "width": 0.16, "height": 0.16, "step": 0.02}},
            "grid": {"origin": [-0.04, -0.04, -0.04], "spacing": [0.004, 0.004, 0.004], "dims": [21, 21, 21]},
            "weight_grid": [[1, 0]]
        }),
    );
    assert!(mmsar(dir, &["simulate", "--config", "run.json"]).status.success());
    for model in ["specular", "edge"] {
        let o = mmsar(dir, &["image", &format!("out/signals_{model}.msig"), "--config", "run.json"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    fs::copy(dir.join("out/signals_specular.mvol"), dir.join("real.mvol")).unwrap();
    let o = mmsar(
        dir,
        &["eval", "real.mvol", "out/signals_specular.mvol", "out/signals_edge.mvol", "--config", "run.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report["fscore"], 1.0);
}
