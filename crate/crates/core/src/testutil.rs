//! Independent forward model for unit tests: builds a camera looking down at
//! a plane, places people on it and projects them with a plain pinhole.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::{PersonObservation, PixelPoint};

pub struct Scene {
    pub fx: f64,
    pub fy: f64,
    pub normal: Vector3<f64>,
    pub rho: f64,
    pub ankles: Vec<Vector3<f64>>,
    pub shoulders: Vec<Vector3<f64>>,
    pub obs: Vec<PersonObservation<f64>>,
}

impl Scene {
    pub fn k(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, 0.0, 0.0, self.fy, 0.0, 0.0, 0.0, 1.0)
    }

    pub fn project(&self, x: &Vector3<f64>) -> PixelPoint<f64> {
        PixelPoint::centered(self.fx * x.x / x.z, self.fy * x.y / x.z)
    }
}

/// Camera `cam_height` meters above the ground, pitched down by `tilt`
/// radians and rolled by 20 degrees. People of separation `h` stand 3..20 m ahead and stay
/// inside a `2 fx x 2 fy` image.
pub fn synth_scene(fx: f64, fy: f64, tilt: f64, cam_height: f64, count: usize, h: f64, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // world up, forward and right in camera coordinates (y down, z forward)
    // for a pitched camera, then rolled about the optical axis
    let roll = 20f64.to_radians();
    let r = nalgebra::Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
    let normal = r * Vector3::new(0.0, -tilt.cos(), -tilt.sin());
    let forward = r * Vector3::new(0.0, -tilt.sin(), tilt.cos());
    let right = r * Vector3::new(1.0, 0.0, 0.0);
    let foot = -normal * cam_height;
    let mut scene = Scene { fx, fy, normal, rho: cam_height, ankles: vec![], shoulders: vec![], obs: vec![] };
    while scene.obs.len() < count {
        let a = rng.random_range(-6.0..6.0);
        let b = rng.random_range(3.0..20.0);
        let xb = foot + right * a + forward * b;
        let xt = xb + normal * h;
        if xb.z <= 0.1 || xt.z <= 0.1 {
            continue;
        }
        let (pb, pt) = (scene.project(&xb), scene.project(&xt));
        let inside = |p: &PixelPoint<f64>| p.u.abs() < fx && p.v.abs() < fy;
        if !inside(&pb) || !inside(&pt) {
            continue;
        }
        scene.ankles.push(xb);
        scene.shoulders.push(xt);
        scene.obs.push(PersonObservation::new(pb, pt).unwrap());
    }
    scene
}
