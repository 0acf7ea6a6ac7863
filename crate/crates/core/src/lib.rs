//! Camera auto-calibration and metric distance estimation from human pose.
//!
//! Given the image positions of people's ankle and shoulder centers seen by a
//! fixed pinhole camera, this crate estimates the focal lengths, the ground
//! plane and the 3-D positions of every person, and from those the physical
//! distances between people.
//!
//! The numerical core ([`solver`], [`baseline`], [`robust`], [`distortion`])
//! is generic over the scalar type through the [`Real`] trait, so it runs in
//! `f32` or `f64`. The aliases at the crate root fix the scalar to `f64`,
//! which is what the simulation harness and the command-line tool use.
//!
//! ```
//! use pedcal::sim::{project_scene, sample_scene, trial_rng, SceneConfig};
//! use pedcal::{solver, HeightPrior};
//!
//! let mut rng = trial_rng(7, 0);
//! let scene = sample_scene(&SceneConfig { person_count: 5, ..SceneConfig::default() }, &mut rng).unwrap();
//! let obs = project_scene(&scene, 0.0, None, &mut rng).unwrap();
//!
//! let cal = solver::calibrate_batch(&obs, HeightPrior::new(1.7).unwrap(), false).unwrap();
//! assert!((cal.intrinsics.fx - scene.intrinsics.fx).abs() < 1e-6 * scene.intrinsics.fx);
//! assert!((cal.plane.normal - scene.plane.normal).norm() < 1e-9);
//!
//! // distance between the first two people, in meters
//! let d = solver::pairwise_distances(&cal.reconstruction)[(0, 1)];
//! assert!((d - (scene.ankles[0] - scene.ankles[1]).norm()).abs() < 1e-6);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod distortion;
mod error;
pub mod keypoints;
pub mod linalg;
pub mod metrics;
pub mod robust;
pub mod sim;
pub mod solver;
pub mod types;

#[cfg(test)]
mod testutil;

pub use error::{Error, Failure, Result};
pub use types::{DistanceBin, Frame, Real};

/// Pixel measurement in `f64`.
pub type PixelPoint = types::PixelPoint<f64>;
/// One person's ankle-center / shoulder-center pair in `f64`.
pub type PersonObservation = types::PersonObservation<f64>;
/// Pinhole intrinsics in `f64`.
pub type CameraIntrinsics = types::CameraIntrinsics<f64>;
/// Ground plane in `f64`.
pub type GroundPlane = types::GroundPlane<f64>;
/// Height prior in `f64`.
pub type HeightPrior = types::HeightPrior<f64>;
/// Metric reconstruction in `f64`.
pub type Reconstruction = types::Reconstruction<f64>;
/// Full calibration output in `f64`.
pub type CalibrationResult = solver::CalibrationResult<f64>;

/// Single-precision variants.
pub type PixelPointF32 = types::PixelPoint<f32>;
pub type PersonObservationF32 = types::PersonObservation<f32>;
pub type CalibrationResultF32 = solver::CalibrationResult<f32>;
