use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pedcal::distortion::{distorted_calibrate, DivisionModel};
use pedcal::keypoints::{self, KeypointFile, SkippedPerson};
use pedcal::robust::ransac_calibrate;
use pedcal::{solver, CalibrationResult, CameraIntrinsics, GroundPlane, HeightPrior, PersonObservation, PixelPoint};

use crate::error::{CliError, CliResult};
use crate::io::{self, parse_image_size};
use crate::manifest::{RansacSettings, RunManifest};

#[derive(Debug, Clone, clap::Args)]
pub struct CalibrateArgs {
    /// Keypoint files, all from one static camera.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    /// Ankle-center to shoulder-center height prior, meters.
    #[arg(long, default_value_t = 1.4)]
    pub height_m: f64,
    /// Constrain fx = fy (square pixels).
    #[arg(long)]
    pub fx_eq_fy: bool,
    /// Robust estimation (default).
    #[arg(long, overrides_with = "no_ransac")]
    pub ransac: bool,
    /// Plain batch estimation over every observation.
    #[arg(long, overrides_with = "ransac")]
    pub no_ransac: bool,
    /// RANSAC shoulder reprojection threshold, pixels.
    #[arg(long, default_value_t = 5.0)]
    pub inlier_px: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also estimate one-parameter division-model lens distortion.
    #[arg(long)]
    pub distortion: bool,
    /// Minimum keypoint confidence for the four joints used.
    #[arg(long, default_value_t = keypoints::DEFAULT_MIN_CONF)]
    pub min_conf: f64,
    /// Image size WIDTHxHEIGHT; overrides the size stored in the files.
    #[arg(long, value_parser = parse_image_size)]
    pub image_size: Option<[u32; 2]>,
    /// Output path (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

impl CalibrateArgs {
    pub fn new(inputs: Vec<PathBuf>) -> Self {
        CalibrateArgs {
            inputs,
            height_m: 1.4,
            fx_eq_fy: false,
            ransac: false,
            no_ransac: false,
            inlier_px: 5.0,
            seed: 0,
            distortion: false,
            min_conf: keypoints::DEFAULT_MIN_CONF,
            image_size: None,
            output: None,
        }
    }

    pub fn use_ransac(&self) -> bool {
        !self.no_ransac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicsJson {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneJson {
    pub normal: [f64; 3],
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualsJson {
    pub vanishing: f64,
    pub focal: f64,
}

/// One accepted person and whether it was used for the final estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersonEntry {
    pub file: usize,
    pub frame_id: String,
    pub person: usize,
    pub inlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedEntry {
    pub file: usize,
    #[serde(flatten)]
    pub skipped: SkippedPerson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub manifest: RunManifest,
    pub intrinsics: IntrinsicsJson,
    pub plane: PlaneJson,
    /// Division-model coefficient in 1/px^2, when distortion was estimated.
    pub distortion_k: Option<f64>,
    pub residuals: ResidualsJson,
    pub observations: usize,
    pub inliers: usize,
    pub ransac_iterations: Option<usize>,
    pub people: Vec<PersonEntry>,
    pub skipped: Vec<SkippedEntry>,
}

impl CalibrationReport {
    pub fn camera(&self) -> CliResult<CameraIntrinsics> {
        let i = &self.intrinsics;
        Ok(CameraIntrinsics::new(i.fx, i.fy, i.cx, i.cy, i.width, i.height)?)
    }

    pub fn ground_plane(&self) -> CliResult<GroundPlane> {
        let n = self.plane.normal;
        Ok(GroundPlane::new(nalgebra::Vector3::new(n[0], n[1], n[2]), self.plane.rho)?)
    }

    pub fn division_model(&self) -> Option<DivisionModel<f64>> {
        self.distortion_k.map(DivisionModel::new)
    }

    /// Principal-centered, undistorted version of a raw-image point.
    pub fn normalize_point(&self, p: PixelPoint) -> CliResult<PixelPoint> {
        let centered = self.camera()?.to_principal_centered(p)?;
        match self.division_model() {
            Some(m) => Ok(m.undistort(&centered)?),
            None => Ok(centered),
        }
    }
}

/// Shifts raw-image observations so the image center becomes the origin.
pub fn center_observations(obs: &[PersonObservation], size: [u32; 2]) -> CliResult<Vec<PersonObservation>> {
    let frame = CameraIntrinsics::centered_in_image(1.0, 1.0, size[0] as f64, size[1] as f64)?;
    obs.iter()
        .map(|o| {
            Ok(PersonObservation::new(frame.to_principal_centered(o.ankle)?, frame.to_principal_centered(o.shoulder)?)?)
        })
        .collect()
}

pub fn load_keypoints(path: &std::path::Path) -> CliResult<KeypointFile> {
    let text = io::read_text(path)?;
    keypoints::parse_keypoint_file(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn resolve_image_size(flag: Option<[u32; 2]>, files: &[(PathBuf, KeypointFile)]) -> CliResult<[u32; 2]> {
    if let Some(size) = flag {
        return Ok(size);
    }
    let mut found: Option<[u32; 2]> = None;
    for (path, f) in files {
        match (found, f.image_size) {
            (_, None) => {}
            (None, Some(s)) => found = Some(s),
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::schema(format!(
                    "{}: image size {}x{} differs from {}x{}",
                    path.display(),
                    b[0],
                    b[1],
                    a[0],
                    a[1]
                )))
            }
            _ => {}
        }
    }
    found.ok_or_else(|| CliError::schema("image size unknown: store it in the keypoint file or pass --image-size"))
}

fn validate(args: &CalibrateArgs) -> CliResult<()> {
    if !(args.height_m > 0.0 && args.height_m.is_finite()) {
        return Err(CliError::schema("--height-m must be positive"));
    }
    if !(args.inlier_px > 0.0 && args.inlier_px.is_finite()) {
        return Err(CliError::schema("--inlier-px must be positive"));
    }
    if !(0.0..=1.0).contains(&args.min_conf) {
        return Err(CliError::schema("--min-conf must lie in [0, 1]"));
    }
    Ok(())
}

pub fn manifest_for(args: &CalibrateArgs, image_size: [u32; 2]) -> RunManifest {
    let mut m = RunManifest::new("calibrate", args.inputs.iter().map(|p| p.display().to_string()).collect());
    m.height_m = args.height_m;
    m.fx_eq_fy = args.fx_eq_fy;
    m.ransac = args.use_ransac().then(|| RansacSettings::new(args.fx_eq_fy, args.inlier_px));
    m.distortion = args.distortion;
    m.seed = args.seed;
    m.min_conf = Some(args.min_conf);
    m.image_size = Some(image_size);
    m
}

/// Ingests every file, estimates the calibration and builds the report.
pub fn calibrate(args: &CalibrateArgs) -> CliResult<CalibrationReport> {
    validate(args)?;
    let files: Vec<(PathBuf, KeypointFile)> =
        args.inputs.iter().map(|p| Ok((p.clone(), load_keypoints(p)?))).collect::<CliResult<_>>()?;
    let size = resolve_image_size(args.image_size, &files)?;
    let manifest = manifest_for(args, size);

    let mut people = Vec::new();
    let mut skipped = Vec::new();
    let mut raw = Vec::new();
    for (file, (_, kf)) in files.iter().enumerate() {
        let ing = keypoints::ingest(&kf.frames, args.min_conf)?;
        for p in ing.people {
            raw.push(p.observation);
            people.push(PersonEntry { file, frame_id: p.frame_id, person: p.person, inlier: true });
        }
        skipped.extend(ing.skipped.into_iter().map(|s| SkippedEntry { file, skipped: s }));
    }
    let obs = center_observations(&raw, size)?;
    let h = HeightPrior::new(args.height_m)?;

    let (cal, model, iterations): (CalibrationResult, Option<DivisionModel<f64>>, Option<usize>) =
        if let Some(settings) = manifest.ransac {
            let res = ransac_calibrate(&obs, h, &settings.config(args.seed), args.fx_eq_fy)?;
            for (entry, &keep) in people.iter_mut().zip(&res.inliers) {
                entry.inlier = keep;
            }
            if args.distortion {
                let consensus: Vec<PersonObservation> =
                    obs.iter().zip(&res.inliers).filter(|(_, &k)| k).map(|(o, _)| *o).collect();
                let (cal, model) = distorted_calibrate(&consensus, h, args.fx_eq_fy)?;
                (cal, Some(model), Some(res.iterations))
            } else {
                (res.calibration, None, Some(res.iterations))
            }
        } else if args.distortion {
            let (cal, model) = distorted_calibrate(&obs, h, args.fx_eq_fy)?;
            (cal, Some(model), None)
        } else {
            (solver::calibrate_batch(&obs, h, args.fx_eq_fy)?, None, None)
        };

    let k = cal.intrinsics.with_image_size(size[0] as f64, size[1] as f64);
    let n = cal.plane.normal;
    Ok(CalibrationReport {
        manifest,
        intrinsics: IntrinsicsJson { fx: k.fx, fy: k.fy, cx: k.cx, cy: k.cy, width: k.width, height: k.height },
        plane: PlaneJson { normal: [n.x, n.y, n.z], rho: cal.plane.rho },
        distortion_k: model.map(|m| m.k),
        residuals: ResidualsJson { vanishing: cal.residuals.vanishing, focal: cal.residuals.focal },
        observations: obs.len(),
        inliers: people.iter().filter(|p| p.inlier).count(),
        ransac_iterations: iterations,
        people,
        skipped,
    })
}

pub fn run(args: &CalibrateArgs) -> CliResult<()> {
    let report = calibrate(args)?;
    io::write_text(args.output.as_deref(), &io::to_json(&report))
}
