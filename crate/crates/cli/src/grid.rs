use std::path::PathBuf;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use pedcal::distortion::DivisionModel;
use pedcal::{CameraIntrinsics, GroundPlane, PixelPoint};

use crate::calibrate::CalibrationReport;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::manifest::RunManifest;

#[derive(Debug, Clone, clap::Args)]
pub struct GridArgs {
    /// Calibration written by `calibrate`.
    #[arg(long)]
    pub calibration: PathBuf,
    /// Grid cell side, meters.
    #[arg(long, default_value_t = 2.0)]
    pub cell_m: f64,
    /// Side of the square grid, meters.
    #[arg(long, default_value_t = 20.0)]
    pub extent_m: f64,
    /// Projected sample points per cell along each line.
    #[arg(long, default_value_t = 10)]
    pub samples_per_cell: usize,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    E1,
    E2,
}

/// One grid line: points `origin + offset * other + t * direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridLine {
    pub direction: Direction,
    pub offset_m: f64,
    /// Raw-image polylines; a line leaving and re-entering the image yields
    /// several.
    pub polylines: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOverlay {
    pub manifest: RunManifest,
    /// Foot of the perpendicular from the camera center, camera frame.
    pub origin_m: [f64; 3],
    pub e1: [f64; 3],
    pub e2: [f64; 3],
    pub lines: Vec<GridLine>,
    pub warnings: Vec<String>,
}

/// Orthonormal plane basis: `e1` is the camera x-axis projected onto the
/// plane, `e2 = N x e1`. `None` when the x-axis is (nearly) normal to the
/// plane.
pub fn plane_basis(plane: &GroundPlane) -> Option<(Vector3<f64>, Vector3<f64>)> {
    let n = plane.normal;
    let x = Vector3::x();
    let e1 = x - n * n.dot(&x);
    if e1.norm() < 1e-6 {
        return None;
    }
    let e1 = e1.normalize();
    Some((e1, n.cross(&e1)))
}

/// Grid offsets `-extent/2, -extent/2 + cell, ...` up to `extent/2`.
pub fn offsets(cell_m: f64, extent_m: f64) -> Vec<f64> {
    let count = (extent_m / cell_m + 1e-9).floor() as usize + 1;
    (0..count).map(|k| -0.5 * extent_m + k as f64 * cell_m).collect()
}

fn project(camera: &CameraIntrinsics, model: Option<&DivisionModel<f64>>, x: &Vector3<f64>) -> Option<[f64; 2]> {
    if !(x.z > 1e-9) {
        return None;
    }
    let p = PixelPoint::centered(camera.fx * x.x / x.z, camera.fy * x.y / x.z);
    let p = match model {
        Some(m) => m.distort(&p).ok()?,
        None => p,
    };
    let (u, v) = (p.u + camera.cx, p.v + camera.cy);
    let clip = camera.width > 0.0 && camera.height > 0.0;
    if clip && !((0.0..=camera.width).contains(&u) && (0.0..=camera.height).contains(&v)) {
        return None;
    }
    Some([u, v])
}

/// Grid anchored on a plane: its origin, in-plane basis and projected lines.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneGrid {
    pub origin: Vector3<f64>,
    /// `None` when the orientation is degenerate.
    pub basis: Option<(Vector3<f64>, Vector3<f64>)>,
    pub lines: Vec<GridLine>,
    pub warnings: Vec<String>,
}

/// Projected grid lines, clipped to the image, plus warnings.
pub fn grid_lines(
    camera: &CameraIntrinsics,
    plane: &GroundPlane,
    model: Option<&DivisionModel<f64>>,
    cell_m: f64,
    extent_m: f64,
    samples_per_cell: usize,
) -> PlaneGrid {
    let origin = -plane.normal * plane.rho;
    let mut warnings = Vec::new();
    let Some((e1, e2)) = plane_basis(plane) else {
        warnings.push("camera x-axis is parallel to the plane normal; no grid orientation".to_string());
        return PlaneGrid { origin, basis: None, lines: Vec::new(), warnings };
    };
    if !(camera.width > 0.0 && camera.height > 0.0) {
        warnings.push("calibration has no image size; polylines are not clipped".to_string());
    }
    let offs = offsets(cell_m, extent_m);
    let steps = ((offs.len() - 1) * samples_per_cell.max(1)).max(1);
    let mut lines = Vec::new();
    for (direction, along, across) in [(Direction::E1, e1, e2), (Direction::E2, e2, e1)] {
        for &offset in &offs {
            let start = origin + across * offset - along * (0.5 * extent_m);
            let mut polylines = Vec::new();
            let mut run: Vec<[f64; 2]> = Vec::new();
            for s in 0..=steps {
                let t = extent_m * s as f64 / steps as f64;
                match project(camera, model, &(start + along * t)) {
                    Some(p) => run.push(p),
                    None => {
                        if run.len() >= 2 {
                            polylines.push(std::mem::take(&mut run));
                        }
                        run.clear();
                    }
                }
            }
            if run.len() >= 2 {
                polylines.push(run);
            }
            lines.push(GridLine { direction, offset_m: offset, polylines });
        }
    }
    if lines.iter().all(|l| l.polylines.is_empty()) {
        warnings.push("no grid line is visible in the image".to_string());
        lines.clear();
    }
    PlaneGrid { origin, basis: Some((e1, e2)), lines, warnings }
}

pub fn grid(args: &GridArgs) -> CliResult<GridOverlay> {
    if !(args.cell_m > 0.0 && args.cell_m.is_finite()) {
        return Err(CliError::schema("--cell-m must be positive"));
    }
    if !(args.extent_m >= 0.0 && args.extent_m.is_finite()) {
        return Err(CliError::schema("--extent-m must be non-negative"));
    }
    let cal: CalibrationReport = io::read_json(&args.calibration)?;
    let camera = cal.camera()?;
    let plane = cal.ground_plane()?;
    let model = cal.division_model();
    let PlaneGrid { origin, basis, lines, warnings } =
        grid_lines(&camera, &plane, model.as_ref(), args.cell_m, args.extent_m, args.samples_per_cell);
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let (e1, e2) = basis.unwrap_or((Vector3::zeros(), Vector3::zeros()));
    let mut manifest = RunManifest::new("grid", vec![args.calibration.display().to_string()]);
    manifest.height_m = cal.manifest.height_m;
    manifest.fx_eq_fy = cal.manifest.fx_eq_fy;
    manifest.distortion = model.is_some();
    manifest.seed = cal.manifest.seed;
    manifest.image_size = cal.manifest.image_size;
    manifest.cell_m = Some(args.cell_m);
    manifest.extent_m = Some(args.extent_m);
    Ok(GridOverlay { manifest, origin_m: origin.into(), e1: e1.into(), e2: e2.into(), lines, warnings })
}

pub fn run(args: &GridArgs) -> CliResult<()> {
    let overlay = grid(args)?;
    io::write_text(args.output.as_deref(), &io::to_json(&overlay))
}
