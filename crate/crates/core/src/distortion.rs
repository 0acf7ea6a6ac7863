//! Joint estimation of one-parameter division-model distortion, depths and
//! vertical vanishing point.
//!
//! Measured (distorted) points `x'` relate to ideal ones through
//! `x = x' / (1 + k r^2)`, `r = ||x'||`. Substituting into the per-person
//! height constraint gives, for every person,
//! `lambda'_T (x'_T + k z_T) - lambda'_B (x'_B + k z_B) - h v = 0` with
//! `z = [0, 0, r^2]` and `lambda' = lambda / (1 + k r^2)`. Stacking all people
//! yields `(A' + k C) X' = 0`, a rectangular pencil that is turned into the
//! square generalized eigenproblem `(A'^T A') X' = k (-A'^T C) X'`.

use nalgebra::{DMatrix, DVector, Vector3};

use crate::solver::{self, CalibrationResult, Residuals, ScaledDepths};
use crate::types::{lit, CameraIntrinsics, Frame, HeightPrior, PersonObservation, PixelPoint, Real};
use crate::{Error, Failure, Result};

/// Division-model parameter `k`, in 1/pixel^2 of the principal-centered frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisionModel<T: Real> {
    pub k: T,
}

impl<T: Real> DivisionModel<T> {
    pub fn new(k: T) -> Self {
        DivisionModel { k }
    }

    /// True when `1 + k r^2 > 0` for every radius in `radii`.
    pub fn is_valid_for(&self, radii: impl IntoIterator<Item = T>) -> bool {
        radii.into_iter().all(|r| T::one() + self.k * r * r > T::zero())
    }

    pub fn undistort(&self, p: &PixelPoint<T>) -> Result<PixelPoint<T>> {
        undistort_division(p, self.k)
    }

    /// Inverse of [`undistort`](Self::undistort): the measured point whose
    /// undistortion is `p`. Fails when no such point exists (`4 k r^2 > 1`).
    pub fn distort(&self, p: &PixelPoint<T>) -> Result<PixelPoint<T>> {
        if p.frame != Frame::PrincipalCentered {
            return Err(Error::invalid("distortion works on principal-centered points"));
        }
        let kr2 = self.k * (p.u * p.u + p.v * p.v);
        let disc = T::one() - lit::<T>(4.0) * kr2;
        if disc < T::zero() {
            return Err(Error::invalid("point outside the division model's range"));
        }
        let s = lit::<T>(2.0) / (T::one() + disc.sqrt());
        Ok(PixelPoint::centered(p.u * s, p.v * s))
    }
}

/// `x = x' / (1 + k ||x'||^2)`.
pub fn undistort_division<T: Real>(p: &PixelPoint<T>, k: T) -> Result<PixelPoint<T>> {
    if p.frame != Frame::PrincipalCentered {
        return Err(Error::invalid("distortion works on principal-centered points"));
    }
    let denom = T::one() + k * (p.u * p.u + p.v * p.v);
    if !(denom > T::zero()) {
        return Err(Error::invalid("point outside the division model's valid domain"));
    }
    Ok(PixelPoint::centered(p.u / denom, p.v / denom))
}

/// `(A' + k C) X' = 0` with unknowns
/// `X' = [lambda'_T1, lambda'_B1, ..., lambda'_TN, lambda'_BN, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSystem<T: Real> {
    pub a_prime: DMatrix<T>,
    pub c: DMatrix<T>,
    /// Largest measured radius, pixels.
    pub max_radius: T,
}

impl<T: Real> DistortionSystem<T> {
    pub fn people(&self) -> usize {
        self.a_prime.nrows() / 3
    }
}

fn fill_system<T: Real>(obs: &[PersonObservation<T>], h: T, scale: T) -> (DMatrix<T>, DMatrix<T>) {
    let n = obs.len();
    let mut a = DMatrix::zeros(3 * n, 2 * n + 3);
    let mut c = DMatrix::zeros(3 * n, 2 * n + 3);
    for (i, o) in obs.iter().enumerate() {
        let (t, b) = (&o.shoulder, &o.ankle);
        let r0 = 3 * i;
        a[(r0, 2 * i)] = t.u / scale;
        a[(r0 + 1, 2 * i)] = t.v / scale;
        a[(r0 + 2, 2 * i)] = T::one();
        a[(r0, 2 * i + 1)] = -b.u / scale;
        a[(r0 + 1, 2 * i + 1)] = -b.v / scale;
        a[(r0 + 2, 2 * i + 1)] = -T::one();
        for d in 0..3 {
            a[(r0 + d, 2 * n + d)] = -h;
        }
        let s2 = scale * scale;
        c[(r0 + 2, 2 * i)] = (t.u * t.u + t.v * t.v) / s2;
        c[(r0 + 2, 2 * i + 1)] = -(b.u * b.u + b.v * b.v) / s2;
    }
    (a, c)
}

fn max_radius<T: Real>(obs: &[PersonObservation<T>]) -> T {
    obs.iter().flat_map(|o| [o.ankle, o.shoulder]).map(|p| (p.u * p.u + p.v * p.v).sqrt()).fold(T::zero(), |m, r| {
        if r > m {
            r
        } else {
            m
        }
    })
}

/// Builds `A'` and `C` in pixel units from principal-centered measurements.
pub fn build_distortion_system<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
) -> Result<DistortionSystem<T>> {
    if obs.len() < 3 {
        return Err(Error::InsufficientObservations { needed: 3, got: obs.len() });
    }
    if obs.iter().any(|o| o.frame() != Frame::PrincipalCentered) {
        return Err(Error::invalid("distortion solver expects principal-centered observations"));
    }
    let (a_prime, c) = fill_system(obs, h.get(), T::one());
    Ok(DistortionSystem { a_prime, c, max_radius: max_radius(obs) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionOptions {
    /// Admissible `|k| r_max^2`, with `r_max` the largest measured radius.
    pub max_k_r2: f64,
    /// Eigenvalues `k` (in units of the largest radius) whose imaginary part
    /// is below `real_tol (1 + |Re k|)` count as real; near-double roots split
    /// into conjugate pairs under rounding.
    pub real_tol: f64,
}

impl Default for DistortionOptions {
    fn default() -> Self {
        DistortionOptions { max_k_r2: 4.0, real_tol: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionSolution<T: Real> {
    pub model: DivisionModel<T>,
    /// `v` from the eigenvector, scaled jointly with the depths so that
    /// `||v|| = 1` and `v_3 >= 0`.
    pub v_tilde: Vector3<T>,
    /// `(lambda'_T, lambda'_B)` per person, same scale as `v_tilde`.
    pub depths: Vec<(T, T)>,
    /// `||(A' + k C) X'|| / ||X'||` of the selected pair, normalized units.
    pub residual: T,
    /// Real eigenvalues (as `k`, 1/pixel^2) that were considered.
    pub candidates: Vec<T>,
}

/// Smallest right singular pair of a tall matrix, without a uniqueness guard.
fn smallest_singular<T: Real>(m: &DMatrix<T>) -> Option<(T, DVector<T>)> {
    if !m.iter().all(|x| x.is_finite()) {
        return None;
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t?;
    let (idx, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal))?;
    Some((s, v_t.row(idx).transpose()))
}

const SHIFTS: [f64; 6] = [0.0, -0.731, 0.517, 1.37, -0.29, 2.13];

/// Shift from [`SHIFTS`] at which `f(s)` is best conditioned.
fn best_shift<T: Real>(f: impl Fn(T) -> DMatrix<T>) -> Result<T> {
    let mut best: Option<(T, T)> = None;
    for s in SHIFTS {
        let s: T = lit(s);
        let sv = f(s).singular_values();
        let (hi, lo) = (sv.max(), sv.min());
        if hi > T::zero() && lo.is_finite() {
            let rc = lo / hi;
            if best.is_none_or(|(_, b)| rc > b) {
                best = Some((s, rc));
            }
        }
    }
    match best {
        Some((s, rc)) if rc > lit(1e-13) => Ok(s),
        _ => Err(Failure::RankDeficient.into()),
    }
}

/// Real `k = shift + 1 / theta` from the eigenvalues `theta` of `m`.
fn real_roots<T: Real>(m: DMatrix<T>, shift: T, real_tol: T) -> Vec<T> {
    let mut out = Vec::new();
    for t in m.complex_eigenvalues().iter() {
        let mag2 = t.re * t.re + t.im * t.im;
        if !(mag2 > T::zero()) {
            continue;
        }
        let (re, im) = (shift + t.re / mag2, -t.im / mag2);
        if im.abs() <= real_tol * (T::one() + re.abs()) {
            out.push(re);
        }
    }
    out
}

/// Real eigenvalues of the square pencil `A^T (A + k C)`, by shift and
/// invert: `-(A^T (A + s C))^-1 A^T C` has eigenvalues `1 / (k - s)`.
///
/// When `A` itself is rank deficient (exact pinhole data) that pencil is
/// singular for every `k`, and the left projection `W = A + s C` is used
/// instead, which leaves `W^T (A + s C) = W^T W` invertible.
fn pencil_eigenvalues<T: Real>(a: &DMatrix<T>, c: &DMatrix<T>, real_tol: T) -> Result<Vec<T>> {
    let at = a.transpose();
    let (p, q): (DMatrix<T>, DMatrix<T>) = (&at * a, &at * c);
    let normal = |s: T| -> DMatrix<T> { &p + &q * s };
    if let Ok(shift) = best_shift(normal) {
        if let Some(m) = normal(shift).lu().solve(&(-&q)) {
            return Ok(real_roots(m, shift, real_tol));
        }
    }
    let shift = best_shift(|s: T| -> DMatrix<T> { a + c * s })?;
    let w = a + c * shift;
    let wt = w.transpose();
    let gram = (&wt * &w).cholesky().ok_or(Failure::RankDeficient)?;
    let wc: DMatrix<T> = &wt * c;
    Ok(real_roots(gram.solve(&(-wc)), shift, real_tol))
}

fn one_signed<T: Real>(x: &DVector<T>, n: usize) -> bool {
    let lambdas = x.rows(0, 2 * n);
    lambdas.iter().all(|&l| l > T::zero()) || lambdas.iter().all(|&l| l < T::zero())
}

/// Solves `A'^T (A' + k C) X = 0` for real `k` and keeps the candidate whose
/// `|k| r_max^2` is within bounds with a valid undistortion domain, whose
/// depths share one sign, and whose residual `||(A' + k C) X||` is smallest.
pub fn solve_distortion<T: Real>(
    system: &DistortionSystem<T>,
    options: &DistortionOptions,
) -> Result<DistortionSolution<T>> {
    let n = system.people();
    let scale = system.max_radius;
    if !(scale > T::zero()) {
        return Err(Failure::RankDeficient.into());
    }
    // work in units of the largest radius: k_hat = k * scale^2
    let mut a = system.a_prime.clone();
    let c = &system.c / (scale * scale);
    for i in 0..n {
        for d in 0..2 {
            a.row_mut(3 * i + d).scale_mut(T::one() / scale);
        }
    }
    for d in 0..2 {
        a.column_mut(2 * n + d).scale_mut(scale);
    }
    let candidates = pencil_eigenvalues(&a, &c, lit(options.real_tol))?;

    let bound: T = lit(options.max_k_r2);
    // radii are at most 1 in these units
    let admissible = |k: T| k.abs() <= bound && T::one() + k > T::zero();
    let mut best: Option<(T, T, DVector<T>)> = None;
    for &k in &candidates {
        if !admissible(k) {
            continue;
        }
        let w = &a + &c * k;
        let Some((_, x)) = smallest_singular(&w) else { continue };
        if !one_signed(&x, n) {
            continue;
        }
        let res = (&w * &x).norm();
        if best.as_ref().is_none_or(|(_, r, _)| res < *r) {
            best = Some((k, res, x));
        }
    }
    let (k_hat, residual, x) = best.ok_or(Failure::NoDistortionCandidate)?;
    let mut v = Vector3::new(x[2 * n] * scale, x[2 * n + 1] * scale, x[2 * n + 2]);
    let mut depths: Vec<(T, T)> = (0..n).map(|i| (x[2 * i], x[2 * i + 1])).collect();
    let mut norm = v.norm();
    if !(norm > T::zero()) {
        return Err(Failure::RankDeficient.into());
    }
    if solver::canonical_sign(v) != v {
        norm = -norm;
    }
    v /= norm;
    for d in &mut depths {
        d.0 /= norm;
        d.1 /= norm;
    }
    let candidates = candidates.iter().map(|&kh| kh / (scale * scale)).collect();
    Ok(DistortionSolution {
        model: DivisionModel::new(k_hat / (scale * scale)),
        v_tilde: v,
        depths,
        residual,
        candidates,
    })
}

/// Calibration with lens distortion: estimates `k`, undistorts every point,
/// then solves focal lengths and everything downstream on the undistorted
/// measurements.
pub fn distorted_calibrate<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
) -> Result<(CalibrationResult<T>, DivisionModel<T>)> {
    distorted_calibrate_with(obs, h, fx_eq_fy, &DistortionOptions::default())
}

pub fn distorted_calibrate_with<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
    options: &DistortionOptions,
) -> Result<(CalibrationResult<T>, DivisionModel<T>)> {
    let system = build_distortion_system(obs, h)?;
    let sol = solve_distortion(&system, options)?;
    let model = sol.model;
    let mut undistorted = Vec::with_capacity(obs.len());
    let mut depths = ScaledDepths { shoulder: Vec::with_capacity(obs.len()), ankle: Vec::with_capacity(obs.len()) };
    for (o, &(lt, lb)) in obs.iter().zip(&sol.depths) {
        // lambda = lambda' (1 + k r'^2) for the undistorted homogeneous point
        let gain = |p: &PixelPoint<T>| T::one() + model.k * (p.u * p.u + p.v * p.v);
        depths.shoulder.push(lt * gain(&o.shoulder));
        depths.ankle.push(lb * gain(&o.ankle));
        let ankle = model.undistort(&o.ankle)?;
        let shoulder = model.undistort(&o.shoulder)?;
        undistorted.push(PersonObservation::new(ankle, shoulder).map_err(|_| Failure::RankDeficient)?);
    }
    let s = solver::normalization_scale(&undistorted);
    let v = Vector3::new(sol.v_tilde.x / s, sol.v_tilde.y / s, sol.v_tilde.z);
    let cal = solver::with_normalized_pixels(&undistorted, |o| {
        let sys = solver::build_focal_system(&v, o, &depths)?;
        let (fx, fy) = solver::solve_focal(&sys, fx_eq_fy)?;
        let intrinsics = CameraIntrinsics::principal_centered(fx, fy)?;
        let residuals = Residuals { vanishing: sol.residual, focal: solver::focal_residual(&sys, fx, fy) };
        solver::complete_calibration(o, &v, &depths, intrinsics, h, residuals)
    })?;
    Ok((cal, model))
}
