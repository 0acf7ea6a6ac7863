//! RANSAC around the direct solver.
//!
//! Minimal samples of two (equal focal lengths) or three people are solved
//! with [`solver::calibrate_batch`]; every observation is then scored by the
//! reprojection error of its shoulder center predicted from its ankle center
//! through the candidate plane and height model. The largest consensus set is
//! re-solved in batch mode.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::solver::{self, CalibrationResult};
use crate::types::{lit, CameraIntrinsics, GroundPlane, HeightPrior, PersonObservation, PixelPoint, Real};
use crate::{Error, Failure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    /// Probability that at least one sample is outlier-free.
    pub confidence: f64,
    /// Assumed inlier ratio used to size the iteration budget.
    pub inlier_ratio_prior: f64,
    /// People per minimal sample: 2 with equal focal lengths, else 3.
    pub min_samples: usize,
    /// Shoulder reprojection threshold, pixels.
    pub inlier_threshold: f64,
    pub max_iterations_cap: usize,
    pub rng_seed: u64,
}

impl RansacConfig {
    pub fn new(fx_eq_fy: bool) -> Self {
        RansacConfig {
            confidence: 0.99,
            inlier_ratio_prior: 0.1,
            min_samples: if fx_eq_fy { 2 } else { 3 },
            inlier_threshold: 5.0,
            max_iterations_cap: 10_000,
            rng_seed: 0,
        }
    }

    pub fn validate(&self, fx_eq_fy: bool) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::invalid("RANSAC confidence must lie in (0, 1)"));
        }
        if !(self.inlier_ratio_prior > 0.0 && self.inlier_ratio_prior < 1.0) {
            return Err(Error::invalid("RANSAC inlier ratio must lie in (0, 1)"));
        }
        let minimal = if fx_eq_fy { 2 } else { 3 };
        if !(self.min_samples == 2 || self.min_samples == 3) || self.min_samples < minimal {
            return Err(Error::invalid(format!("RANSAC sample size must be {minimal} or 3")));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::invalid("inlier threshold must be positive"));
        }
        if self.max_iterations_cap == 0 {
            return Err(Error::invalid("iteration cap must be positive"));
        }
        Ok(())
    }

    /// Iteration budget from the prior, capped.
    pub fn iterations(&self) -> Result<usize> {
        let n = ransac_iterations(self.confidence, self.inlier_ratio_prior, self.min_samples)?;
        Ok(n.min(self.max_iterations_cap))
    }
}

/// `ceil(log(1 - p) / log(1 - ratio^n))`, at least 1.
pub fn ransac_iterations(p: f64, inlier_ratio: f64, n: usize) -> Result<usize> {
    if !(p > 0.0 && p < 1.0) || !(inlier_ratio > 0.0 && inlier_ratio < 1.0) || n == 0 {
        return Err(Error::invalid("RANSAC iteration arguments out of range"));
    }
    let all_inliers = inlier_ratio.powi(n as i32);
    let iters = ((1.0 - p).ln() / (-all_inliers).ln_1p()).ceil();
    if !iters.is_finite() {
        return Err(Error::invalid("RANSAC iteration count overflows"));
    }
    Ok((iters as usize).max(1))
}

/// Predicted shoulder center of a person whose ankle is seen at `ankle`.
/// `None` when the ankle ray misses the plane or the shoulder is behind the
/// camera.
pub fn predict_shoulder<T: Real>(
    intrinsics: &CameraIntrinsics<T>,
    plane: &GroundPlane<T>,
    h: HeightPrior<T>,
    ankle: &PixelPoint<T>,
) -> Option<PixelPoint<T>> {
    let xb = plane.intersect_ray(&intrinsics.ray(ankle))?;
    let xt = xb + plane.normal * h.get();
    intrinsics.project(&xt)
}

/// Shoulder reprojection error of `o` under a calibration, pixels.
pub fn shoulder_error<T: Real>(cal: &CalibrationResult<T>, h: HeightPrior<T>, o: &PersonObservation<T>) -> Option<T> {
    predict_shoulder(&cal.intrinsics, &cal.plane, h, &o.ankle).map(|p| p.distance(&o.shoulder))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacResult<T: Real> {
    /// Batch calibration on the consensus set; its reconstruction lists the
    /// inliers in their original order.
    pub calibration: CalibrationResult<T>,
    pub inliers: Vec<bool>,
    pub iterations: usize,
    /// Iteration that produced the winning candidate.
    pub best_iteration: usize,
}

impl<T: Real> RansacResult<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Robust calibration. Deterministic for a given `config.rng_seed`; ties in
/// consensus size keep the earliest iteration.
pub fn ransac_calibrate<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    config: &RansacConfig,
    fx_eq_fy: bool,
) -> Result<RansacResult<T>> {
    config.validate(fx_eq_fy)?;
    let n = config.min_samples;
    if obs.len() <= n {
        return Err(Error::InsufficientObservations { needed: n + 1, got: obs.len() });
    }
    let iterations = config.iterations()?;
    let threshold: T = lit(config.inlier_threshold);
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut best: Option<(usize, Vec<bool>, usize)> = None;
    let mut sample = Vec::with_capacity(n);
    for it in 0..iterations {
        sample.clear();
        sample.extend(index::sample(&mut rng, obs.len(), n).into_iter().map(|i| obs[i]));
        let Ok(candidate) = solver::calibrate_batch(&sample, h, fx_eq_fy) else {
            continue;
        };
        let mask: Vec<bool> =
            obs.iter().map(|o| shoulder_error(&candidate, h, o).is_some_and(|e| e <= threshold)).collect();
        let count = mask.iter().filter(|&&b| b).count();
        if best.as_ref().is_none_or(|(c, _, _)| count > *c) {
            best = Some((count, mask, it));
            if count == obs.len() {
                break;
            }
        }
    }
    let (count, inliers, best_iteration) = best.ok_or(Failure::NoConsensus)?;
    if count < n + 1 {
        return Err(Failure::NoConsensus.into());
    }
    let consensus: Vec<PersonObservation<T>> = obs.iter().zip(&inliers).filter(|(_, &k)| k).map(|(o, _)| *o).collect();
    let calibration = solver::calibrate_batch(&consensus, h, fx_eq_fy)?;
    Ok(RansacResult { calibration, inliers, iterations, best_iteration })
}
