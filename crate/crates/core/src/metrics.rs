//! Error metrics used to score an estimate against ground truth.

use nalgebra::Vector3;

use crate::types::{lit, Real};
use crate::{Error, Result};

/// `|f_hat - f| / f * 100`.
pub fn focal_error<T: Real>(f_hat: T, f_true: T) -> Result<T> {
    if !(f_true > T::zero()) {
        return Err(Error::invalid("true focal length must be positive"));
    }
    Ok((f_hat - f_true).abs() / f_true * lit(100.0))
}

/// Relative error of any positive quantity, in percent (used for `rho`).
pub fn relative_error<T: Real>(estimate: T, truth: T) -> Result<T> {
    if !(truth > T::zero()) {
        return Err(Error::invalid("reference value must be positive"));
    }
    Ok((estimate - truth).abs() / truth * lit(100.0))
}

/// Angle between two unit normals in degrees, in `[0, 180]`.
///
/// Evaluated as `atan2(|a x b|, a . b)`, which equals `acos(a . b)` for unit
/// vectors but stays exact near zero and never leaves the domain.
pub fn normal_error<T: Real>(n_hat: &Vector3<T>, n_true: &Vector3<T>) -> Result<T> {
    let tol = lit::<T>(1e-6);
    if (n_hat.norm() - T::one()).abs() > tol || (n_true.norm() - T::one()).abs() > tol {
        return Err(Error::invalid("normals must have unit length"));
    }
    let sin = n_hat.cross(n_true).norm();
    let cos = n_hat.dot(n_true).clamp(-T::one(), T::one());
    Ok(sin.atan2(cos) * lit(180.0) / T::pi())
}

/// `||X_hat - X|| / ||X|| * 100`.
pub fn reconstruction_error<T: Real>(x_hat: &Vector3<T>, x_true: &Vector3<T>) -> Result<T> {
    let n = x_true.norm();
    if !(n > T::zero()) {
        return Err(Error::invalid("reference point at the camera center"));
    }
    Ok((x_hat - x_true).norm() / n * lit(100.0))
}

/// Arithmetic mean of per-point reconstruction errors.
pub fn mean_reconstruction_error<T: Real>(pairs: impl IntoIterator<Item = (Vector3<T>, Vector3<T>)>) -> Result<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (x_hat, x_true) in pairs {
        sum += reconstruction_error(&x_hat, &x_true)?;
        count += 1;
    }
    if count == 0 {
        return Err(Error::invalid("no points to average"));
    }
    Ok(sum / lit(count as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn focal_error_examples() {
        assert_relative_eq!(focal_error(1100.0, 1000.0).unwrap(), 10.0, epsilon = 1e-12);
        assert_eq!(focal_error(1000.0, 1000.0).unwrap(), 0.0);
        // published single-camera comparison: 1201.94 px estimated vs 1197.80 px true
        let e: f64 = focal_error(1201.94, 1197.80).unwrap();
        assert!((e - 0.346).abs() < 5e-4, "{e}");
        assert!(focal_error(1.0, 0.0).is_err());
        assert!(focal_error(1.0, -5.0).is_err());
    }

    #[test]
    fn normal_error_examples() {
        let z = Vector3::new(0.0, 0.0, 1.0);
        assert_eq!(normal_error(&z, &z).unwrap(), 0.0);
        let y = Vector3::new(0.0, 1.0, 0.0);
        assert_relative_eq!(normal_error(&z, &y).unwrap(), 90.0, epsilon = 1e-12);
        // dot product a hair above one must clamp, not produce NaN
        let a = Vector3::new(0.6, 0.8, 0.0);
        let b = Vector3::new(0.6 + 1e-16, 0.8 + 1e-16, 0.0);
        let e: f64 = normal_error(&a, &b).unwrap();
        assert!(e.is_finite() && e.abs() < 1e-6);
        assert!(normal_error(&Vector3::new(0.0, 0.0, 2.0), &z).is_err());
    }

    #[test]
    fn reconstruction_error_examples() {
        let x = Vector3::new(0.0, 0.0, 10.0);
        assert_eq!(reconstruction_error(&x, &x).unwrap(), 0.0);
        assert_relative_eq!(reconstruction_error(&Vector3::new(0.0, 0.0, 11.0), &x).unwrap(), 10.0, epsilon = 1e-12);
        let m = mean_reconstruction_error(vec![(x, x), (Vector3::new(0.0, 0.0, 11.0), x)]).unwrap();
        assert_relative_eq!(m, 5.0, epsilon = 1e-12);
        assert!(reconstruction_error(&x, &Vector3::zeros()).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let e: f32 = focal_error(1100.0f32, 1000.0f32).unwrap();
        assert!((e - 10.0).abs() < 1e-4);
    }

    proptest! {
        #[test]
        fn scale_free(f_hat in 1.0..5000.0f64, f in 1.0..5000.0f64, c in 1e-3..1e3f64) {
            let a = focal_error(f_hat, f).unwrap();
            let b = focal_error(c * f_hat, c * f).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
            let r = relative_error(c * f_hat, c * f).unwrap();
            prop_assert!((a - r).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn normal_error_in_range(ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in -1.0..1.0f64,
                                 bx in -1.0..1.0f64, by in -1.0..1.0f64, bz in -1.0..1.0f64) {
            let a = Vector3::new(ax, ay, az);
            let b = Vector3::new(bx, by, bz);
            prop_assume!(a.norm() > 1e-3 && b.norm() > 1e-3);
            let e = normal_error(&a.normalize(), &b.normalize()).unwrap();
            prop_assert!((0.0..=180.0).contains(&e));
            prop_assert_eq!(normal_error(&a.normalize(), &a.normalize()).unwrap(), 0.0);
        }
    }
}
