//! Shared domain types and coordinate conventions.
//!
//! Camera frame: x right, y down, z along the optical axis. Image points are
//! either in raw pixel coordinates or shifted so the principal point sits at
//! the origin; the solvers only accept the latter.

use nalgebra::{Matrix3, RealField, Vector3};
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::{Error, Result};

/// Scalar type the numerical core is generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + ToPrimitive {}

impl<T: RealField + Copy + ToPrimitive> Real for T {}

/// Converts an `f64` constant into `T`.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Which pixel frame a point is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    RawImage,
    PrincipalCentered,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint<T: Real> {
    pub u: T,
    pub v: T,
    pub frame: Frame,
}

impl<T: Real> PixelPoint<T> {
    pub fn raw(u: T, v: T) -> Self {
        PixelPoint { u, v, frame: Frame::RawImage }
    }

    pub fn centered(u: T, v: T) -> Self {
        PixelPoint { u, v, frame: Frame::PrincipalCentered }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// `[u, v, 1]`.
    pub fn homogeneous(&self) -> Vector3<T> {
        Vector3::new(self.u, self.v, T::one())
    }

    /// True when a raw-image point lies in `[0, width) x [0, height)`.
    pub fn in_image(&self, width: T, height: T) -> bool {
        self.u >= T::zero() && self.u < width && self.v >= T::zero() && self.v < height
    }

    pub fn distance(&self, other: &Self) -> T {
        let du = self.u - other.u;
        let dv = self.v - other.v;
        (du * du + dv * dv).sqrt()
    }
}

/// Ankle-center and shoulder-center image points of one person.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PersonObservation<T: Real> {
    pub ankle: PixelPoint<T>,
    pub shoulder: PixelPoint<T>,
}

impl<T: Real> PersonObservation<T> {
    pub fn new(ankle: PixelPoint<T>, shoulder: PixelPoint<T>) -> Result<Self> {
        if ankle.frame != shoulder.frame {
            return Err(Error::invalid("ankle and shoulder points use different frames"));
        }
        if !ankle.is_finite() || !shoulder.is_finite() {
            return Err(Error::invalid("non-finite keypoint coordinate"));
        }
        if ankle.u == shoulder.u && ankle.v == shoulder.v {
            return Err(Error::invalid("ankle and shoulder centers coincide"));
        }
        Ok(PersonObservation { ankle, shoulder })
    }

    pub fn frame(&self) -> Frame {
        self.ankle.frame
    }
}

/// Pinhole intrinsics with zero skew. In the principal-centered frame the
/// calibration matrix is `K = diag(fx, fy, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics<T: Real> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: T,
    pub height: T,
}

impl<T: Real> CameraIntrinsics<T> {
    pub fn new(fx: T, fy: T, cx: T, cy: T, width: T, height: T) -> Result<Self> {
        if !(fx > T::zero() && fy > T::zero()) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::invalid("focal lengths must be positive and finite"));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy, width, height })
    }

    /// Focal lengths only; principal point at the origin and no image size.
    /// This is what the solvers return, since they only see centered points.
    pub fn principal_centered(fx: T, fy: T) -> Result<Self> {
        Self::new(fx, fy, T::zero(), T::zero(), T::zero(), T::zero())
    }

    /// Principal point at the image center.
    pub fn centered_in_image(fx: T, fy: T, width: T, height: T) -> Result<Self> {
        let two = lit::<T>(2.0);
        Self::new(fx, fy, width / two, height / two, width, height)
    }

    pub fn with_image_size(self, width: T, height: T) -> Self {
        let two = lit::<T>(2.0);
        CameraIntrinsics { cx: width / two, cy: height / two, width, height, ..self }
    }

    pub fn k(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&Vector3::new(self.fx, self.fy, T::one()))
    }

    pub fn k_inv(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&Vector3::new(T::one() / self.fx, T::one() / self.fy, T::one()))
    }

    /// Diagonal of `W = K^-T K^-1 = diag(1/fx^2, 1/fy^2, 1)`.
    pub fn w_diag(&self) -> Vector3<T> {
        Vector3::new(T::one() / (self.fx * self.fx), T::one() / (self.fy * self.fy), T::one())
    }

    pub fn to_principal_centered(&self, p: PixelPoint<T>) -> Result<PixelPoint<T>> {
        if p.frame != Frame::RawImage {
            return Err(Error::invalid("expected a raw-image point"));
        }
        Ok(PixelPoint::centered(p.u - self.cx, p.v - self.cy))
    }

    pub fn to_raw(&self, p: PixelPoint<T>) -> Result<PixelPoint<T>> {
        if p.frame != Frame::PrincipalCentered {
            return Err(Error::invalid("expected a principal-centered point"));
        }
        Ok(PixelPoint::raw(p.u + self.cx, p.v + self.cy))
    }

    /// Projects a camera-frame point to principal-centered pixels. `None`
    /// when the point is not in front of the camera.
    pub fn project(&self, x: &Vector3<T>) -> Option<PixelPoint<T>> {
        if x.z <= T::zero() {
            return None;
        }
        Some(PixelPoint::centered(self.fx * x.x / x.z, self.fy * x.y / x.z))
    }

    /// Viewing ray `K^-1 [u, v, 1]` of a principal-centered point.
    pub fn ray(&self, p: &PixelPoint<T>) -> Vector3<T> {
        Vector3::new(p.u / self.fx, p.v / self.fy, T::one())
    }
}

/// Ground plane `N^T X + rho = 0` in the camera frame, `N` pointing from the
/// ground towards the people's heads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane<T: Real> {
    pub normal: Vector3<T>,
    pub rho: T,
}

impl<T: Real> GroundPlane<T> {
    /// Normalizes `normal`; rejects a zero normal and `rho <= 0`.
    pub fn new(normal: Vector3<T>, rho: T) -> Result<Self> {
        let n = normal.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::invalid("ground plane normal must be non-zero"));
        }
        if !(rho > T::zero()) || !rho.is_finite() {
            return Err(Error::invalid("ground plane offset must be positive"));
        }
        Ok(GroundPlane { normal: normal / n, rho })
    }

    /// Signed distance `N^T X + rho`.
    pub fn residual(&self, x: &Vector3<T>) -> T {
        self.normal.dot(x) + self.rho
    }

    /// Intersects the ray `t * dir, t > 0` with the plane.
    pub fn intersect_ray(&self, dir: &Vector3<T>) -> Option<Vector3<T>> {
        let denom = self.normal.dot(dir);
        if denom == T::zero() {
            return None;
        }
        let t = -self.rho / denom;
        if t > T::zero() && t.is_finite() {
            Some(dir * t)
        } else {
            None
        }
    }
}

/// Ankle-to-shoulder separation `h` along the plane normal, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeightPrior<T: Real>(T);

impl<T: Real> HeightPrior<T> {
    pub fn new(h: T) -> Result<Self> {
        if h > T::zero() && h.is_finite() {
            Ok(HeightPrior(h))
        } else {
            Err(Error::invalid("height prior must be positive"))
        }
    }

    pub fn get(&self) -> T {
        self.0
    }
}

impl Default for HeightPrior<f64> {
    fn default() -> Self {
        HeightPrior(1.4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructedPerson<T: Real> {
    pub lambda_b: T,
    pub lambda_t: T,
    pub ankle: Vector3<T>,
    pub shoulder: Vector3<T>,
}

/// Metric 3-D ankle and shoulder centers, in observation order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reconstruction<T: Real> {
    pub people: Vec<ReconstructedPerson<T>>,
}

impl<T: Real> Reconstruction<T> {
    pub fn len(&self) -> usize {
        self.people.len()
    }

    pub fn is_empty(&self) -> bool {
        self.people.is_empty()
    }

    pub fn ankles(&self) -> impl Iterator<Item = &Vector3<T>> {
        self.people.iter().map(|p| &p.ankle)
    }
}

/// Distance categories used for classification-style evaluation. Each bin is
/// half-open on the right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DistanceBin {
    #[serde(rename = "B0_1")]
    B0To1,
    #[serde(rename = "B1_2")]
    B1To2,
    #[serde(rename = "B2_4")]
    B2To4,
    #[serde(rename = "B4_INF")]
    B4ToInf,
}

impl DistanceBin {
    pub const ALL: [DistanceBin; 4] =
        [DistanceBin::B0To1, DistanceBin::B1To2, DistanceBin::B2To4, DistanceBin::B4ToInf];

    /// `None` for negative or NaN distances.
    pub fn from_meters(d: f64) -> Option<Self> {
        if !(d >= 0.0) {
            return None;
        }
        Some(if d < 1.0 {
            DistanceBin::B0To1
        } else if d < 2.0 {
            DistanceBin::B1To2
        } else if d < 4.0 {
            DistanceBin::B2To4
        } else {
            DistanceBin::B4ToInf
        })
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            DistanceBin::B0To1 => "0-1 m",
            DistanceBin::B1To2 => "1-2 m",
            DistanceBin::B2To4 => "2-4 m",
            DistanceBin::B4ToInf => ">4 m",
        }
    }
}

impl fmt::Display for DistanceBin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}
