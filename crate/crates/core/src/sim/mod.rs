//! Synthetic scenes, measurement corruption and the Monte Carlo harness that
//! compares the solvers on identical measurements.

mod study;

pub use study::{run_study, study_levels, write_csv, Study, StudyRow, CSV_HEADER};

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::baseline_calibrate;
use crate::distortion::distorted_calibrate;
use crate::metrics;
use crate::solver::{calibrate_batch, CalibrationResult};
use crate::types::{CameraIntrinsics, GroundPlane, HeightPrior, PersonObservation, PixelPoint};
use crate::{Error, Result};

/// Unit in which the polynomial distortion radius is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusUnit {
    /// `r = ||x - c||` in pixels.
    Pixels,
    /// `r = ||x - c|| / fx`, the radius in units of the horizontal focal length.
    FocalLength,
}

/// Forward polynomial distortion `x_d = c + (1 + k1 r^2 + k2 r^4)(x - c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialDistortion {
    pub k1: f64,
    pub k2: f64,
    pub unit: RadiusUnit,
}

impl PolynomialDistortion {
    pub fn new(k1: f64, k2: f64, unit: RadiusUnit) -> Self {
        PolynomialDistortion { k1, k2, unit }
    }

    /// Distorts a principal-centered point.
    pub fn apply(&self, p: &PixelPoint<f64>, intrinsics: &CameraIntrinsics<f64>) -> PixelPoint<f64> {
        let scale = match self.unit {
            RadiusUnit::Pixels => 1.0,
            RadiusUnit::FocalLength => intrinsics.fx,
        };
        let r2 = (p.u * p.u + p.v * p.v) / (scale * scale);
        let g = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        PixelPoint::centered(p.u * g, p.v * g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    /// Direct linear solver, pinhole model.
    Direct,
    Baseline,
    /// Direct solver with division-model distortion estimation.
    Distortion,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Baseline => "baseline",
            SolverKind::Distortion => "distortion",
        }
    }

    pub fn calibrate(
        self,
        obs: &[PersonObservation<f64>],
        h: HeightPrior<f64>,
        fx_eq_fy: bool,
    ) -> Result<CalibrationResult<f64>> {
        match self {
            SolverKind::Direct => calibrate_batch(obs, h, fx_eq_fy),
            SolverKind::Baseline => baseline_calibrate(obs, h, fx_eq_fy),
            SolverKind::Distortion => distorted_calibrate(obs, h, fx_eq_fy).map(|(c, _)| c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// `(width, height)` in pixels.
    pub resolution: (u32, u32),
    /// Vertical field of view, degrees.
    pub fov_deg: f64,
    pub person_count: usize,
    pub noise_std: f64,
    pub height_mean: f64,
    pub height_std: f64,
    pub height_range: (f64, f64),
    pub distortion: Option<PolynomialDistortion>,
    pub camera_height_range: (f64, f64),
    /// Downward pitch, degrees.
    pub tilt_range_deg: (f64, f64),
    /// Magnitude of the roll about the optical axis, degrees; the sign is
    /// drawn at random.
    pub roll_range_deg: (f64, f64),
    /// People stand at most this far, along the ground, from the point below
    /// the camera, meters.
    pub max_ground_distance: f64,
    pub fx_eq_fy: bool,
    pub solvers: Vec<SolverKind>,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            resolution: (1920, 1080),
            fov_deg: 90.0,
            person_count: 3,
            noise_std: 0.0,
            height_mean: 1.7,
            height_std: 0.0,
            height_range: (1.5, 1.9),
            distortion: None,
            camera_height_range: (2.0, 10.0),
            tilt_range_deg: (10.0, 60.0),
            roll_range_deg: (20.0, 45.0),
            max_ground_distance: 30.0,
            fx_eq_fy: false,
            solvers: vec![SolverKind::Direct, SolverKind::Baseline],
            rng_seed: 0,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.resolution;
        if w == 0 || h == 0 {
            return Err(Error::invalid("resolution must be positive"));
        }
        if !(self.fov_deg >= 1.0 && self.fov_deg < 180.0) {
            return Err(Error::invalid("field of view must lie in [1, 180) degrees"));
        }
        if self.person_count < 2 {
            return Err(Error::invalid("person_count must be at least 2"));
        }
        if !(self.noise_std >= 0.0) || !(self.height_std >= 0.0) {
            return Err(Error::invalid("standard deviations must be non-negative"));
        }
        let (lo, hi) = self.height_range;
        if !(lo > 0.0 && lo <= self.height_mean && self.height_mean <= hi) {
            return Err(Error::invalid("height_range must be positive and contain height_mean"));
        }
        let ordered = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a <= b;
        if !ordered(self.camera_height_range) || !(self.camera_height_range.0 > 0.0) {
            return Err(Error::invalid("camera_height_range must be a positive interval"));
        }
        if !ordered(self.tilt_range_deg) || !ordered(self.roll_range_deg) {
            return Err(Error::invalid("angle ranges must be ordered intervals"));
        }
        if !(self.max_ground_distance > 0.0) {
            return Err(Error::invalid("max_ground_distance must be positive"));
        }
        if self.solvers.is_empty() {
            return Err(Error::invalid("no solver selected"));
        }
        Ok(())
    }
}

/// Pinhole camera for a resolution and vertical field of view, with the
/// principal point at the image center.
pub fn make_camera(resolution: (u32, u32), fov_deg: f64) -> Result<CameraIntrinsics<f64>> {
    let (w, h) = (resolution.0 as f64, resolution.1 as f64);
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::invalid("resolution must be positive"));
    }
    if !(1.0..180.0).contains(&fov_deg) {
        return Err(Error::invalid("field of view must lie in [1, 180) degrees"));
    }
    let fy = 0.5 * h / (0.5 * fov_deg.to_radians()).tan();
    let fx = w / h * fy;
    CameraIntrinsics::centered_in_image(fx, fy, w, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthScene {
    pub intrinsics: CameraIntrinsics<f64>,
    pub plane: GroundPlane<f64>,
    pub ankles: Vec<Vector3<f64>>,
    pub shoulders: Vec<Vector3<f64>>,
    pub heights: Vec<f64>,
}

const MAX_PLACEMENT_TRIES: usize = 100_000;

/// Truncated Gaussian by rejection; the mean itself when `std` is zero.
pub fn sample_height<R: Rng + ?Sized>(mean: f64, std: f64, range: (f64, f64), rng: &mut R) -> Result<f64> {
    if std == 0.0 {
        return Ok(mean);
    }
    let normal = Normal::new(mean, std).map_err(|e| Error::invalid(e.to_string()))?;
    for _ in 0..MAX_PLACEMENT_TRIES {
        let x = normal.sample(rng);
        if x >= range.0 && x <= range.1 {
            return Ok(x);
        }
    }
    Err(Error::invalid("height distribution has negligible mass in its range"))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Draws a camera pose and people standing on the ground, each fully inside
/// the image. Camera pose and placement, and person heights, come from two
/// separate streams seeded from `rng`, so configurations that differ only in
/// the height distribution share their geometry draws.
pub fn sample_scene<R: Rng + ?Sized>(config: &SceneConfig, rng: &mut R) -> Result<GroundTruthScene> {
    config.validate()?;
    let mut geo = ChaCha8Rng::seed_from_u64(rng.random());
    let mut height_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let intrinsics = make_camera(config.resolution, config.fov_deg)?;
    let cam_height = uniform(&mut geo, config.camera_height_range);
    let tilt = uniform(&mut geo, config.tilt_range_deg).to_radians();
    let roll_mag = uniform(&mut geo, config.roll_range_deg).to_radians();
    let roll = if geo.random_bool(0.5) { roll_mag } else { -roll_mag };

    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
    let normal = rot * Vector3::new(0.0, -tilt.cos(), -tilt.sin());
    let forward = rot * Vector3::new(0.0, -tilt.sin(), tilt.cos());
    let right = rot * Vector3::x();
    let plane = GroundPlane::new(normal, cam_height)?;
    let normal = plane.normal;
    let footprint = -normal * cam_height;

    let (w, h) = (intrinsics.width, intrinsics.height);
    let visible = |x: &Vector3<f64>| match intrinsics.project(x) {
        Some(p) => x.z > 0.0 && p.u.abs() < 0.5 * w && p.v.abs() < 0.5 * h,
        None => false,
    };

    let heights = (0..config.person_count)
        .map(|_| sample_height(config.height_mean, config.height_std, config.height_range, &mut height_rng))
        .collect::<Result<Vec<f64>>>()?;
    let d = config.max_ground_distance;
    let mut scene = GroundTruthScene { intrinsics, plane, ankles: vec![], shoulders: vec![], heights: vec![] };
    for height in heights {
        let mut placed = false;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let a = geo.random_range(-d..d);
            let b = geo.random_range(0.0..d);
            let xb = footprint + right * a + forward * b;
            let xt = xb + normal * height;
            if visible(&xb) && visible(&xt) {
                scene.ankles.push(xb);
                scene.shoulders.push(xt);
                scene.heights.push(height);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::invalid("could not place a visible person; the configuration sees almost no ground"));
        }
    }
    Ok(scene)
}

/// Projects every person, applies optional polynomial distortion, then adds
/// i.i.d. Gaussian noise to each coordinate. Points pushed out of the frame
/// by noise are kept. Output is principal-centered.
pub fn project_scene<R: Rng + ?Sized>(
    scene: &GroundTruthScene,
    noise_std: f64,
    distortion: Option<&PolynomialDistortion>,
    rng: &mut R,
) -> Result<Vec<PersonObservation<f64>>> {
    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let k = &scene.intrinsics;
    let mut image = |x: &Vector3<f64>| -> Result<PixelPoint<f64>> {
        let mut p = k.project(x).filter(|_| x.z > 0.0).ok_or_else(|| Error::invalid("point behind the camera"))?;
        if let Some(d) = distortion {
            p = d.apply(&p, k);
        }
        if let Some(n) = &noise {
            p.u += n.sample(rng);
            p.v += n.sample(rng);
        }
        Ok(p)
    };
    scene
        .ankles
        .iter()
        .zip(&scene.shoulders)
        .map(|(xb, xt)| {
            let b = image(xb)?;
            let t = image(xt)?;
            PersonObservation::new(b, t)
        })
        .collect()
}

/// The five per-trial error metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Percent.
    pub fx: f64,
    /// Percent.
    pub fy: f64,
    /// Degrees.
    pub normal: f64,
    /// Percent.
    pub rho: f64,
    /// Percent, mean over all ankle and shoulder points.
    pub recon: f64,
}

impl ErrorMetrics {
    pub fn evaluate(cal: &CalibrationResult<f64>, truth: &GroundTruthScene) -> Result<Self> {
        let fx = metrics::focal_error(cal.intrinsics.fx, truth.intrinsics.fx)?;
        let fy = metrics::focal_error(cal.intrinsics.fy, truth.intrinsics.fy)?;
        let normal = metrics::normal_error(&cal.plane.normal, &truth.plane.normal)?;
        let rho = metrics::relative_error(cal.plane.rho, truth.plane.rho)?;
        let pairs = cal
            .reconstruction
            .people
            .iter()
            .zip(truth.ankles.iter().zip(&truth.shoulders))
            .flat_map(|(p, (xb, xt))| [(p.ankle, *xb), (p.shoulder, *xt)]);
        let recon = metrics::mean_reconstruction_error(pairs)?;
        Ok(ErrorMetrics { fx, fy, normal, rho, recon })
    }

    fn values(&self) -> [f64; 5] {
        [self.fx, self.fy, self.normal, self.rho, self.recon]
    }
}

/// One solver's result on one trial: metrics, or the reason it failed.
pub type TrialResult = std::result::Result<ErrorMetrics, Error>;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// One entry per configured solver, in configuration order.
    pub results: Vec<(SolverKind, TrialResult)>,
}

impl TrialOutcome {
    pub fn get(&self, kind: SolverKind) -> Option<&TrialResult> {
        self.results.iter().find(|(k, _)| *k == kind).map(|(_, r)| r)
    }
}

/// Samples one scene and one measurement set, and runs every configured
/// solver on that same measurement set.
pub fn run_trial<R: Rng + ?Sized>(config: &SceneConfig, rng: &mut R) -> TrialOutcome {
    let mut scene_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let mut noise_rng = ChaCha8Rng::seed_from_u64(rng.random());
    let measured = sample_scene(config, &mut scene_rng).and_then(|scene| {
        let obs = project_scene(&scene, config.noise_std, config.distortion.as_ref(), &mut noise_rng)?;
        Ok((scene, obs))
    });
    let h = HeightPrior::new(config.height_mean);
    let results = config
        .solvers
        .iter()
        .map(|&kind| {
            let r = match (&measured, &h) {
                (Ok((scene, obs)), Ok(h)) => {
                    kind.calibrate(obs, *h, config.fx_eq_fy).and_then(|cal| ErrorMetrics::evaluate(&cal, scene))
                }
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            (kind, r)
        })
        .collect();
    TrialOutcome { results }
}

/// Independent generator for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Aggregate of one solver over many trials. Means and standard deviations
/// are over successful trials only (NaN when none succeeded).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: ErrorMetrics,
    pub std: ErrorMetrics,
    /// Percent of trials that failed.
    pub failure_rate: f64,
    pub trial_count: usize,
    pub failures: usize,
}

impl TrialStats {
    pub fn from_results<'a>(results: impl IntoIterator<Item = &'a TrialResult>) -> Self {
        let mut n = 0usize;
        let mut failures = 0usize;
        let mut ok: Vec<[f64; 5]> = Vec::new();
        for r in results {
            n += 1;
            match r {
                Ok(m) => ok.push(m.values()),
                Err(_) => failures += 1,
            }
        }
        let count = ok.len() as f64;
        let mut mean = [f64::NAN; 5];
        let mut std = [f64::NAN; 5];
        if !ok.is_empty() {
            for i in 0..5 {
                let m = ok.iter().map(|v| v[i]).sum::<f64>() / count;
                let var = ok.iter().map(|v| (v[i] - m).powi(2)).sum::<f64>() / count;
                mean[i] = m;
                std[i] = var.sqrt();
            }
        }
        let pack = |a: [f64; 5]| ErrorMetrics { fx: a[0], fy: a[1], normal: a[2], rho: a[3], recon: a[4] };
        TrialStats {
            mean: pack(mean),
            std: pack(std),
            failure_rate: if n == 0 { 0.0 } else { 100.0 * failures as f64 / n as f64 },
            trial_count: n,
            failures,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloResult {
    pub stats: Vec<(SolverKind, TrialStats)>,
}

impl MonteCarloResult {
    pub fn get(&self, kind: SolverKind) -> Option<&TrialStats> {
        self.stats.iter().find(|(k, _)| *k == kind).map(|(_, s)| s)
    }
}

/// Runs `trials` independent trials in parallel. The result depends only on
/// the configuration (including its seed) and the trial count.
pub fn run_monte_carlo(config: &SceneConfig, trials: usize) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    config.validate()?;
    let outcomes: Vec<TrialOutcome> =
        (0..trials as u64).into_par_iter().map(|i| run_trial(config, &mut trial_rng(config.rng_seed, i))).collect();
    let stats = config
        .solvers
        .iter()
        .enumerate()
        .map(|(s, &kind)| (kind, TrialStats::from_results(outcomes.iter().map(|o| &o.results[s].1))))
        .collect();
    Ok(MonteCarloResult { stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn camera_from_fov() {
        let c = make_camera((1920, 1080), 90.0).unwrap();
        assert!((c.fy - 540.0).abs() < 1e-9 && (c.fx - 960.0).abs() < 1e-9);
        assert_eq!((c.cx, c.cy), (960.0, 540.0));
        let c = make_camera((640, 480), 90.0).unwrap();
        assert!((c.fy - 240.0).abs() < 1e-9 && (c.fx - 320.0).abs() < 1e-9);
        assert!(make_camera((640, 480), 0.5).is_err());
        assert!(make_camera((640, 480), 180.0).is_err());
    }

    #[test]
    fn polynomial_pixel_units() {
        let cam = make_camera((1920, 1080), 90.0).unwrap();
        let d = PolynomialDistortion::new(1e-3, 0.0, RadiusUnit::Pixels);
        let p = d.apply(&PixelPoint::centered(100.0, 0.0), &cam);
        assert!((p.u - 1100.0).abs() < 1e-9 && p.v == 0.0);
        let d = PolynomialDistortion::new(1e-3, 0.0, RadiusUnit::FocalLength);
        let p = d.apply(&PixelPoint::centered(960.0, 0.0), &cam);
        assert!((p.u - 960.0 * 1.001).abs() < 1e-9);
    }

    #[test]
    fn optical_axis_projects_to_origin() {
        let cam = make_camera((1920, 1080), 90.0).unwrap();
        let plane = GroundPlane::new(Vector3::new(0.0, -1.0, 0.0), 3.0).unwrap();
        let scene = GroundTruthScene {
            intrinsics: cam,
            plane,
            ankles: vec![Vector3::new(0.0, 0.0, 5.0)],
            shoulders: vec![Vector3::new(0.0, -1.7, 5.0)],
            heights: vec![1.7],
        };
        let obs = project_scene(&scene, 0.0, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!((obs[0].ankle.u, obs[0].ankle.v), (0.0, 0.0));
        let mut behind = scene.clone();
        behind.ankles[0].z = -1.0;
        assert!(project_scene(&behind, 0.0, None, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn noise_has_requested_spread() {
        let cam = make_camera((1920, 1080), 90.0).unwrap();
        let scene = GroundTruthScene {
            intrinsics: cam,
            plane: GroundPlane::new(Vector3::new(0.0, -1.0, 0.0), 3.0).unwrap(),
            ankles: vec![Vector3::new(0.5, 1.0, 5.0)],
            shoulders: vec![Vector3::new(0.5, -0.7, 5.0)],
            heights: vec![1.7],
        };
        let ideal = cam.project(&scene.ankles[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> =
            (0..10_000).map(|_| project_scene(&scene, 2.0, None, &mut rng).unwrap()[0].ankle.u - ideal.u).collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let s = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt();
        assert!((s - 2.0).abs() < 0.1, "{s}");
    }

    #[test]
    fn scene_invariants() {
        let cfg = SceneConfig { person_count: 20, height_std: 0.1, ..SceneConfig::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = sample_scene(&cfg, &mut rng).unwrap();
            for ((xb, xt), h) in s.ankles.iter().zip(&s.shoulders).zip(&s.heights) {
                assert!(s.plane.residual(xb).abs() < 1e-12);
                assert_eq!(*xt, xb + s.plane.normal * *h);
                let p = s.intrinsics.project(xb).unwrap();
                assert!(p.u.abs() < 960.0 && p.v.abs() < 540.0);
            }
        }
        let constant = SceneConfig { person_count: 10, ..SceneConfig::default() };
        let s = sample_scene(&constant, &mut rng).unwrap();
        assert!(s.heights.iter().all(|&h| h == 1.7));
    }

    #[test]
    fn truncated_heights() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let hs: Vec<f64> = (0..10_000).map(|_| sample_height(1.7, 0.1, (1.5, 1.9), &mut rng).unwrap()).collect();
        let min = hs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = hs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = hs.iter().sum::<f64>() / hs.len() as f64;
        assert!(min >= 1.5 && max <= 1.9);
        assert!((mean - 1.7).abs() < 0.01);
    }

    #[test]
    fn config_validation() {
        assert!(SceneConfig::default().validate().is_ok());
        assert!(SceneConfig { person_count: 1, ..SceneConfig::default() }.validate().is_err());
        assert!(SceneConfig { height_mean: 2.0, ..SceneConfig::default() }.validate().is_err());
        assert!(SceneConfig { fov_deg: 180.0, ..SceneConfig::default() }.validate().is_err());
        assert!(run_monte_carlo(&SceneConfig::default(), 0).is_err());
    }

    #[test]
    fn two_people_fail_without_shared_focal() {
        let cfg = SceneConfig { person_count: 2, ..SceneConfig::default() };
        let out = run_trial(&cfg, &mut trial_rng(1, 0));
        assert!(out.results.iter().all(|(_, r)| r.is_err()));
    }

    #[test]
    fn noise_free_trials_are_exact() {
        let cfg = SceneConfig { rng_seed: 5, ..SceneConfig::default() };
        for i in 0..50 {
            let out = run_trial(&cfg, &mut trial_rng(cfg.rng_seed, i));
            for (k, r) in &out.results {
                let m = r.as_ref().unwrap_or_else(|e| panic!("{k:?} trial {i}: {e}"));
                assert!(m.values().iter().all(|&x| x < 1e-6), "{k:?} {m:?}");
            }
        }
    }

    #[test]
    fn deterministic_and_order_independent() {
        let cfg = SceneConfig { noise_std: 1.0, rng_seed: 42, ..SceneConfig::default() };
        let a = run_monte_carlo(&cfg, 64).unwrap();
        let b = run_monte_carlo(&cfg, 64).unwrap();
        assert_eq!(a, b);
        let seq: Vec<TrialOutcome> = (0..64).map(|i| run_trial(&cfg, &mut trial_rng(42, i))).collect();
        let direct = TrialStats::from_results(seq.iter().map(|o| o.get(SolverKind::Direct).unwrap()));
        assert_eq!(a.get(SolverKind::Direct).unwrap(), &direct);
        assert_eq!(run_trial(&cfg, &mut trial_rng(42, 3)), seq[3]);
    }

    #[test]
    fn stats_exclude_failures() {
        let m = ErrorMetrics { fx: 1.0, fy: 2.0, normal: 3.0, rho: 4.0, recon: 5.0 };
        let m2 = ErrorMetrics { fx: 3.0, ..m };
        let rs = vec![Ok(m), Err(Error::invalid("x")), Ok(m2), Err(Error::invalid("y"))];
        let s = TrialStats::from_results(&rs);
        assert_eq!(s.trial_count, 4);
        assert_eq!(s.failures, 2);
        assert_eq!(s.failure_rate, 50.0);
        assert_eq!(s.mean.fx, 2.0);
        assert_eq!(s.std.fx, 1.0);
        assert_eq!(s.mean.recon, 5.0);
        let none = TrialStats::from_results(&rs[1..2]);
        assert!(none.mean.fx.is_nan() && none.failure_rate == 100.0);
    }
}
