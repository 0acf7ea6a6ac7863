//! Comparison solver built from explicit line intersection and fitting.
//!
//! The vertical vanishing point is the least-squares intersection of the
//! people's ankle-to-shoulder image lines. Every pair of people gives one
//! point on the horizon (the image lines through their two shoulders and
//! through their two ankles are images of parallel 3-D lines), and a line is
//! fitted through those points. The focal lengths then follow from the
//! pole-polar relation `l ~ W p` between horizon and vanishing point. Depths,
//! scale, reconstruction and plane offset are shared with [`crate::solver`]
//! so that only the intrinsics/normal extraction differs between the two.

use nalgebra::{DMatrix, Matrix2, Vector2, Vector3};

use crate::linalg;
use crate::solver::{self, canonical_sign, CalibrationResult, Residuals};
use crate::types::{lit, CameraIntrinsics, Frame, HeightPrior, PersonObservation, Real};
use crate::{Error, Failure, Result};

/// Image line `l1 u + l2 v + l3 = 0` with `||(l1, l2)|| = 1` and `l3 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonLine<T: Real> {
    pub l: Vector3<T>,
    /// Root-mean-square distance of the fitted points to the line, pixels.
    pub rms_residual: T,
    /// Number of horizon points the fit used.
    pub points_used: usize,
}

impl<T: Real> HorizonLine<T> {
    pub fn new(l: Vector3<T>) -> Result<Self> {
        let n = Vector2::new(l.x, l.y).norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Failure::PointAtInfinity.into());
        }
        let mut l = l / n;
        if l.z < T::zero() {
            l = -l;
        }
        Ok(HorizonLine { l, rms_residual: T::zero(), points_used: 0 })
    }

    /// Unsigned distance of an inhomogeneous point to the line.
    pub fn distance(&self, p: &Vector2<T>) -> T {
        (self.l.x * p.x + self.l.y * p.y + self.l.z).abs()
    }
}

fn check_input<T: Real>(obs: &[PersonObservation<T>], needed: usize) -> Result<()> {
    if obs.len() < needed {
        return Err(Error::InsufficientObservations { needed, got: obs.len() });
    }
    if obs.iter().any(|o| o.frame() != Frame::PrincipalCentered) {
        return Err(Error::invalid("baseline expects principal-centered observations"));
    }
    Ok(())
}

/// Least-squares intersection of the per-person lines, minimizing the sum of
/// squared line-normalized algebraic distances over unit `p`.
pub fn vanishing_point_by_intersection<T: Real>(obs: &[PersonObservation<T>]) -> Result<(Vector3<T>, T)> {
    check_input(obs, 2)?;
    let mut a = DMatrix::zeros(obs.len(), 3);
    for (i, o) in obs.iter().enumerate() {
        let l = o.shoulder.homogeneous().cross(&o.ankle.homogeneous());
        let n = Vector2::new(l.x, l.y).norm();
        if !(n > T::zero()) {
            return Err(Failure::RankDeficient.into());
        }
        a.row_mut(i).copy_from(&(l / n).transpose());
    }
    let nv = linalg::null_vector(&a)?;
    let p = Vector3::new(nv.vector[0], nv.vector[1], nv.vector[2]);
    Ok((canonical_sign(p), nv.smallest))
}

/// Horizon points from every pair of people, in inhomogeneous pixels.
/// Pairs whose point is (numerically) at infinity are skipped.
pub fn horizon_points<T: Real>(obs: &[PersonObservation<T>]) -> Vec<Vector2<T>> {
    let tiny: T = lit(1e-9);
    let mut out = Vec::new();
    for i in 0..obs.len() {
        for j in (i + 1)..obs.len() {
            let tops = obs[i].shoulder.homogeneous().cross(&obs[j].shoulder.homogeneous());
            let bottoms = obs[i].ankle.homogeneous().cross(&obs[j].ankle.homogeneous());
            let q = tops.cross(&bottoms);
            let n = q.norm();
            if !(n > T::zero()) || q.z.abs() < tiny * n {
                continue;
            }
            out.push(Vector2::new(q.x / q.z, q.y / q.z));
        }
    }
    out
}

/// Total-least-squares line through the pairwise horizon points.
pub fn horizon_by_fitting<T: Real>(obs: &[PersonObservation<T>]) -> Result<HorizonLine<T>> {
    check_input(obs, 2)?;
    let pts = horizon_points(obs);
    fit_line(&pts)
}

/// Orthogonal-regression line through `pts`; needs two distinct points.
pub fn fit_line<T: Real>(pts: &[Vector2<T>]) -> Result<HorizonLine<T>> {
    if pts.len() < 2 {
        return Err(Failure::PointAtInfinity.into());
    }
    let n: T = lit(pts.len() as f64);
    let centroid = pts.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n;
    let mut scatter = Matrix2::zeros();
    for p in pts {
        let d = p - centroid;
        scatter += d * d.transpose();
    }
    if !(scatter.trace() > T::zero()) || !scatter.trace().is_finite() {
        return Err(Failure::RankDeficient.into());
    }
    let eig = scatter.symmetric_eigen();
    let k = if eig.eigenvalues[0] <= eig.eigenvalues[1] { 0 } else { 1 };
    let normal = eig.eigenvectors.column(k).into_owned();
    let l = Vector3::new(normal.x, normal.y, -normal.dot(&centroid));
    let mut line = HorizonLine::new(l)?;
    let ss = pts.iter().map(|p| line.distance(p).powi(2)).fold(T::zero(), |a, b| a + b);
    line.rms_residual = (ss / n).sqrt();
    line.points_used = pts.len();
    Ok(line)
}

/// Focal lengths from the pole-polar relation `l ~ W p`:
/// `fx^2 = p1 l3 / (l1 p3)` and `fy^2 = p2 l3 / (l2 p3)`. With `fx_eq_fy`
/// the two ratios are averaged.
pub fn focal_from_pole_polar<T: Real>(p: &Vector3<T>, l: &HorizonLine<T>, fx_eq_fy: bool) -> Result<(T, T)> {
    let tiny: T = lit(1e-12);
    let l = l.l;
    if p.z.abs() <= tiny * p.norm() || l.z.abs() <= tiny * l.norm() {
        return Err(Failure::PointAtInfinity.into());
    }
    let ratio = |pi: T, li: T| {
        if li.abs() <= tiny * l.norm() {
            None
        } else {
            Some(pi * l.z / (li * p.z))
        }
    };
    let (rx, ry) = (ratio(p.x, l.x), ratio(p.y, l.y));
    let (sx, sy) = if fx_eq_fy {
        let s = match (rx, ry) {
            (Some(a), Some(b)) => (a + b) * lit(0.5),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Err(Failure::RankDeficient.into()),
        };
        (s, s)
    } else {
        (rx.ok_or(Failure::RankDeficient)?, ry.ok_or(Failure::RankDeficient)?)
    };
    if !(sx > T::zero() && sy > T::zero()) || !sx.is_finite() || !sy.is_finite() {
        return Err(Failure::NonPositiveFocal.into());
    }
    Ok((sx.sqrt(), sy.sqrt()))
}

/// Intersection-and-fitting calibration; needs at least three people. Runs
/// on the same normalized pixels as [`solver::calibrate_batch`].
pub fn baseline_calibrate<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
) -> Result<CalibrationResult<T>> {
    check_input(obs, 3)?;
    solver::with_normalized_pixels(obs, |o| baseline_unnormalized(o, h, fx_eq_fy))
}

fn baseline_unnormalized<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
) -> Result<CalibrationResult<T>> {
    let (p, sv) = vanishing_point_by_intersection(obs)?;
    let horizon = horizon_by_fitting(obs)?;
    let (fx, fy) = focal_from_pole_polar(&p, &horizon, fx_eq_fy)?;
    let intrinsics = CameraIntrinsics::principal_centered(fx, fy)?;
    let depths = solver::solve_scaled_depths(obs, &p, h)?;
    let residuals = Residuals { vanishing: sv, focal: horizon.rms_residual };
    solver::complete_calibration(obs, &p, &depths, intrinsics, h, residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::testutil::synth_scene;
    use crate::types::PixelPoint;

    fn obs(b: (f64, f64), t: (f64, f64)) -> PersonObservation<f64> {
        PersonObservation::new(PixelPoint::centered(b.0, b.1), PixelPoint::centered(t.0, t.1)).unwrap()
    }

    fn angle(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
        let c = a.cross(b).norm().atan2(a.dot(b));
        c.min(std::f64::consts::PI - c)
    }

    #[test]
    fn concurrent_lines() {
        let (p, _) =
            vanishing_point_by_intersection(&[obs((1.0, 0.0), (0.5, 1.0)), obs((-1.0, 0.0), (-0.5, 1.0))]).unwrap();
        assert!(angle(&p, &Vector3::new(0.0, 2.0, 1.0)) < 1e-12);
    }

    #[test]
    fn parallel_lines_meet_at_infinity() {
        let (p, _) =
            vanishing_point_by_intersection(&[obs((0.0, 0.0), (0.0, -1.0)), obs((1.0, 0.0), (1.0, -1.0))]).unwrap();
        assert!(angle(&p, &Vector3::new(0.0, 1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn identical_lines_fail() {
        let r = vanishing_point_by_intersection(&[obs((0.0, 0.0), (0.0, -1.0)), obs((0.0, 4.0), (0.0, 2.0))]);
        assert!(r.is_err());
        assert!(vanishing_point_by_intersection(&[obs((0.0, 0.0), (0.0, -1.0))]).is_err());
    }

    #[test]
    fn synthetic_vanishing_point() {
        let s = synth_scene(960.0, 540.0, 30f64.to_radians(), 5.0, 5, 1.7, 1);
        let (p, _) = vanishing_point_by_intersection(&s.obs).unwrap();
        assert!(angle(&p, &(s.k() * s.normal)) < 1e-9);
    }

    #[test]
    fn pair_points_lie_on_true_horizon() {
        let s = synth_scene(960.0, 540.0, 30f64.to_radians(), 5.0, 3, 1.7, 2);
        // the plane's line at infinity images to K^-T N
        let k_inv_t = s.k().try_inverse().unwrap().transpose();
        let l_true = k_inv_t * s.normal;
        let pts = horizon_points(&s.obs);
        assert_eq!(pts.len(), 3);
        for q in pts {
            let qh = Vector3::new(q.x, q.y, 1.0);
            let rel = l_true.dot(&qh).abs() / (l_true.norm() * qh.norm());
            assert!(rel < 1e-9, "{rel}");
        }
        let fitted = horizon_by_fitting(&s.obs).unwrap();
        assert!(angle(&fitted.l, &l_true) < 1e-9);
    }

    #[test]
    fn equal_people_at_same_height_give_no_horizon_point() {
        // same image height, same segment length, vertical segments: tops and
        // bottoms lines are parallel
        let o = [obs((-100.0, 50.0), (-100.0, -50.0)), obs((100.0, 50.0), (100.0, -50.0))];
        assert!(horizon_points(&o).is_empty());
        assert_eq!(horizon_by_fitting(&o), Err(Error::Estimation(Failure::PointAtInfinity)));
    }

    #[test]
    fn fitted_line_is_optimal() {
        let pts = [Vector2::new(0.0, 0.1), Vector2::new(1.0, 0.9), Vector2::new(2.0, 2.1)];
        let line = fit_line(&pts).unwrap();
        let cost = |l: &Vector3<f64>| {
            let n = Vector2::new(l.x, l.y).norm();
            pts.iter().map(|p| ((l.x * p.x + l.y * p.y + l.z) / n).powi(2)).sum::<f64>()
        };
        let best = cost(&line.l);
        for d in [
            Vector3::new(1e-3, 0.0, 0.0),
            Vector3::new(0.0, 1e-3, 0.0),
            Vector3::new(0.0, 0.0, 1e-3),
            Vector3::new(-1e-3, 1e-3, -1e-3),
        ] {
            assert!(cost(&(line.l + d)) >= best);
            assert!(cost(&(line.l - d)) >= best);
        }
        let same = [Vector2::new(1.0, 1.0), Vector2::new(1.0, 1.0)];
        assert!(fit_line(&same).is_err());
    }

    #[test]
    fn pole_polar_recovers_focal() {
        let s = synth_scene(960.0, 540.0, 40f64.to_radians(), 5.0, 3, 1.7, 3);
        let p = s.k() * s.normal;
        let l = HorizonLine::new(s.k().try_inverse().unwrap().transpose() * s.normal).unwrap();
        let (fx, fy) = focal_from_pole_polar(&p, &l, false).unwrap();
        assert!((fx - 960.0).abs() < 1e-6 * 960.0 && (fy - 540.0).abs() < 1e-6 * 540.0);
        let flipped = HorizonLine { l: -l.l, ..l };
        assert_eq!(focal_from_pole_polar(&p, &flipped, false).unwrap(), (fx, fy));
        let at_inf = Vector3::new(0.3, 0.9, 0.0);
        assert_eq!(focal_from_pole_polar(&at_inf, &l, false), Err(Error::Estimation(Failure::PointAtInfinity)));
    }

    #[test]
    fn noise_free_calibration() {
        for seed in 0..10 {
            let s = synth_scene(960.0, 540.0, (20.0 + 3.0 * seed as f64).to_radians(), 6.0, 3, 1.7, 100 + seed);
            let r = baseline_calibrate(&s.obs, HeightPrior::new(1.7).unwrap(), false).unwrap();
            assert!(metrics::focal_error(r.intrinsics.fx, 960.0).unwrap() < 1e-6);
            assert!(metrics::focal_error(r.intrinsics.fy, 540.0).unwrap() < 1e-6);
            assert!(metrics::normal_error(&r.plane.normal, &s.normal).unwrap() < 1e-6);
            assert!(metrics::relative_error(r.plane.rho, s.rho).unwrap() < 1e-6);
            let direct = solver::calibrate_batch(&s.obs, HeightPrior::new(1.7).unwrap(), false).unwrap();
            assert!((direct.intrinsics.fx - r.intrinsics.fx).abs() < 1e-6 * 960.0);
        }
    }

    #[test]
    fn homogeneous_scaling_does_not_matter() {
        let s = synth_scene(960.0, 540.0, 35f64.to_radians(), 4.0, 4, 1.7, 9);
        let (p, _) = vanishing_point_by_intersection(&s.obs).unwrap();
        let l = horizon_by_fitting(&s.obs).unwrap();
        let a = focal_from_pole_polar(&p, &l, false).unwrap();
        let b = focal_from_pole_polar(&(p * -7.5), &l, false).unwrap();
        assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
    }

    #[test]
    fn needs_three_people() {
        let s = synth_scene(960.0, 540.0, 35f64.to_radians(), 4.0, 2, 1.7, 9);
        assert!(matches!(
            baseline_calibrate(&s.obs, HeightPrior::new(1.7).unwrap(), true),
            Err(Error::InsufficientObservations { needed: 3, got: 2 })
        ));
    }
}
