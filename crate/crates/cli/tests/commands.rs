use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pedcal::keypoints::{frames_from_observations, KeypointFile};
use pedcal::sim::{project_scene, sample_scene, trial_rng, SceneConfig};
use pedcal_cli::calibrate::CalibrationReport;
use pedcal_cli::distances::DistanceReport;
use pedcal_cli::grid::GridOverlay;

fn pedcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pedcal")).args(args).output().unwrap()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn write_scene(dir: &Path, people: usize, per_frame: usize) -> PathBuf {
    let config = SceneConfig { person_count: people.max(2), ..SceneConfig::default() };
    let mut rng = trial_rng(42, 0);
    let scene = sample_scene(&config, &mut rng).unwrap();
    let mut obs = project_scene(&scene, 0.0, None, &mut rng).unwrap();
    obs.truncate(people);
    let frames = frames_from_observations(&obs, &scene.intrinsics, per_frame, 6.0).unwrap();
    let file = KeypointFile { image_size: Some([1920, 1080]), frames };
    let path = dir.join(format!("scene_{people}.json"));
    std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
    path
}

#[test]
fn calibrate_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let kp = write_scene(dir.path(), 12, 4);
    let a = pedcal(&["calibrate", &s(&kp), "--height-m", "1.7", "--seed", "3"]);
    let b = pedcal(&["calibrate", &s(&kp), "--height-m", "1.7", "--seed", "3"]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let report: CalibrationReport = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report.observations, 12);
    assert_eq!(report.inliers, 12);
    assert_eq!(report.ransac_iterations, Some(4603));
    assert_eq!(report.manifest.seed, 3);
}

#[test]
fn batch_and_distortion_modes() {
    let dir = tempfile::tempdir().unwrap();
    let kp = write_scene(dir.path(), 12, 4);
    let batch = pedcal(&["calibrate", &s(&kp), "--height-m", "1.7", "--no-ransac"]);
    let report: CalibrationReport = serde_json::from_slice(&batch.stdout).unwrap();
    assert_eq!(report.ransac_iterations, None);
    assert!(report.manifest.ransac.is_none());
    let dist = pedcal(&["calibrate", &s(&kp), "--height-m", "1.7", "--distortion"]);
    assert!(dist.status.success(), "{}", String::from_utf8_lossy(&dist.stderr));
    let report: CalibrationReport = serde_json::from_slice(&dist.stdout).unwrap();
    assert!(report.distortion_k.unwrap().abs() < 1e-12);
}

#[test]
fn one_person_is_an_estimation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let kp = write_scene(dir.path(), 1, 1);
    let out = pedcal(&["calibrate", &s(&kp)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(out.stdout.is_empty());
}

#[test]
fn malformed_input_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"frames\": [").unwrap();
    assert_eq!(pedcal(&["calibrate", &s(&bad)]).status.code(), Some(2));
    assert_eq!(pedcal(&["calibrate"]).status.code(), Some(2));
    assert_eq!(pedcal(&["simulate", "--study", "nonsense"]).status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedcal(&["calibrate", &s(&dir.path().join("absent.json"))]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn distances_and_grid_from_a_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let kp = write_scene(dir.path(), 9, 3);
    let cal = dir.path().join("cal.json");
    assert!(pedcal(&["calibrate", &s(&kp), "--height-m", "1.7", "-o", &s(&cal)]).status.success());

    let out = pedcal(&["distances", &s(&kp), "--calibration", &s(&cal), "--threshold-m", "1.8288"]);
    assert!(out.status.success());
    let report: DistanceReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.frames.len(), 3);
    for f in &report.frames {
        assert_eq!(f.pairs.len(), 3);
        assert_eq!(f.nearest.len(), 3);
        assert!(f.nearest.iter().all(|n| n.unsafe_flag == Some(n.distance_m <= 1.8288)));
    }

    let out = pedcal(&["grid", "--calibration", &s(&cal)]);
    assert!(out.status.success());
    let grid: GridOverlay = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!grid.lines.is_empty());
    for p in grid.lines.iter().flat_map(|l| &l.polylines).flatten() {
        assert!((0.0..=1920.0).contains(&p[0]) && (0.0..=1080.0).contains(&p[1]));
    }
}

#[test]
fn simulate_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = pedcal(&["simulate", "--study", "noise", "--trials", "20", "--out-dir", &s(dir.path())]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("noise.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6 * 2);
    assert!(csv.starts_with("study,level,solver"));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("noise.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["trials"], 20);
}
