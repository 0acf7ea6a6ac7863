//! Direct linear calibration and reconstruction.
//!
//! Each person contributes one linear constraint on the vertical vanishing
//! point `v = K N` (the image segment from ankle to shoulder points at it).
//! With `v` known up to scale, the per-person depths follow from a 3x2 linear
//! system, and every pair of people gives one equation linear in
//! `W = diag(1/fx^2, 1/fy^2, 1)` stating that the ankles span a plane
//! orthogonal to `N`. The remaining scale is fixed by `||N|| = 1` and the sign
//! by requiring positive depths.

use nalgebra::{DMatrix, DVector, Matrix3x2, Vector3};

use crate::linalg;
use crate::types::{
    lit, CameraIntrinsics, Frame, GroundPlane, HeightPrior, PersonObservation, PixelPoint, Real, ReconstructedPerson,
    Reconstruction,
};
use crate::{Error, Failure, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingSolution<T: Real> {
    /// Unit-norm scaled vanishing point `mu * K N`, third component >= 0.
    pub v_tilde: Vector3<T>,
    pub smallest_singular_value: T,
}

/// Depths of every person recovered up to the common scale of `v_tilde`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledDepths<T: Real> {
    pub shoulder: Vec<T>,
    pub ankle: Vec<T>,
}

impl<T: Real> ScaledDepths<T> {
    pub fn len(&self) -> usize {
        self.ankle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ankle.is_empty()
    }
}

/// `B [1/fx^2, 1/fy^2]^T = y`, one row per pair of people.
#[derive(Debug, Clone, PartialEq)]
pub struct FocalSystem<T: Real> {
    pub b: DMatrix<T>,
    pub y: DVector<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T: Real> {
    /// Smallest singular value of the vanishing-point system.
    pub vanishing: T,
    /// `||B s - y|| / ||y||` of the focal system (0 when not applicable).
    pub focal: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult<T: Real> {
    /// Principal-centered intrinsics; attach an image size with
    /// [`CameraIntrinsics::with_image_size`].
    pub intrinsics: CameraIntrinsics<T>,
    pub plane: GroundPlane<T>,
    pub reconstruction: Reconstruction<T>,
    /// Signed factor between `v_tilde` and `K N`.
    pub mu: T,
    pub residuals: Residuals<T>,
}

fn check_centered<T: Real>(obs: &[PersonObservation<T>]) -> Result<()> {
    if obs.iter().any(|o| o.frame() != Frame::PrincipalCentered) {
        return Err(Error::invalid("solver expects principal-centered observations"));
    }
    Ok(())
}

/// Stacks `(x_T x x_B)^T` for every person into an `N x 3` matrix.
pub fn build_vanishing_system<T: Real>(obs: &[PersonObservation<T>]) -> Result<DMatrix<T>> {
    if obs.len() < 2 {
        return Err(Error::InsufficientObservations { needed: 2, got: obs.len() });
    }
    check_centered(obs)?;
    let mut a = DMatrix::zeros(obs.len(), 3);
    for (i, o) in obs.iter().enumerate() {
        let row = o.shoulder.homogeneous().cross(&o.ankle.homogeneous());
        a.row_mut(i).copy_from(&row.transpose());
    }
    Ok(a)
}

/// Flips `v` so its last component is non-negative. Components below
/// `1e-12 ||v||` count as zero, in which case the next one decides.
pub(crate) fn canonical_sign<T: Real>(v: Vector3<T>) -> Vector3<T> {
    let tiny = v.norm() * lit(1e-12);
    for i in (0..3).rev() {
        if v[i].abs() > tiny {
            return if v[i] < T::zero() { -v } else { v };
        }
    }
    v
}

/// Minimizes `||A v||` over unit `v`.
pub fn solve_vanishing_direction<T: Real>(a: &DMatrix<T>) -> Result<VanishingSolution<T>> {
    if a.ncols() != 3 {
        return Err(Error::invalid("vanishing system must have three columns"));
    }
    if a.nrows() < 2 {
        return Err(Error::InsufficientObservations { needed: 2, got: a.nrows() });
    }
    let nv = linalg::null_vector(a)?;
    let v = Vector3::new(nv.vector[0], nv.vector[1], nv.vector[2]);
    Ok(VanishingSolution { v_tilde: canonical_sign(v), smallest_singular_value: nv.smallest })
}

/// Least-squares depths of one person from
/// `lambda_T x_T - lambda_B x_B = h v_tilde`. Returns `(lambda_T, lambda_B)`.
pub fn solve_person_depths<T: Real>(
    o: &PersonObservation<T>,
    v_tilde: &Vector3<T>,
    h: HeightPrior<T>,
) -> Result<(T, T)> {
    let xt = o.shoulder.homogeneous();
    let xb = o.ankle.homogeneous();
    let m = Matrix3x2::from_columns(&[xt, -xb]);
    let rhs = v_tilde * h.get();
    // 2x2 normal equations, guarded on the conditioning of M^T M
    let mtm = m.transpose() * m;
    let (a, b, d) = (mtm[(0, 0)], mtm[(0, 1)], mtm[(1, 1)]);
    let det = a * d - b * b;
    let scale = a * d;
    if !(scale > T::zero()) || !(det > scale * lit(linalg::RANK_TOL)) {
        return Err(Failure::RankDeficient.into());
    }
    let r = m.transpose() * rhs;
    let lt = (d * r[0] - b * r[1]) / det;
    let lb = (a * r[1] - b * r[0]) / det;
    Ok((lt, lb))
}

/// Scaled depths of every person for a given `v_tilde`.
pub fn solve_scaled_depths<T: Real>(
    obs: &[PersonObservation<T>],
    v_tilde: &Vector3<T>,
    h: HeightPrior<T>,
) -> Result<ScaledDepths<T>> {
    check_centered(obs)?;
    let mut out = ScaledDepths { shoulder: Vec::with_capacity(obs.len()), ankle: Vec::with_capacity(obs.len()) };
    for o in obs {
        let (lt, lb) = solve_person_depths(o, v_tilde, h)?;
        out.shoulder.push(lt);
        out.ankle.push(lb);
    }
    Ok(out)
}

/// One row per unordered pair `(i, j)`, `i < j`: with
/// `r = v_tilde .* (lambda_B,i x_B,i - lambda_B,j x_B,j)`, the row of `B` is
/// `(r1, r2)` and `y = -r3`.
pub fn build_focal_system<T: Real>(
    v_tilde: &Vector3<T>,
    obs: &[PersonObservation<T>],
    depths: &ScaledDepths<T>,
) -> Result<FocalSystem<T>> {
    let n = obs.len();
    if depths.len() != n {
        return Err(Error::invalid("depth count does not match observation count"));
    }
    if n < 2 {
        return Err(Error::InsufficientObservations { needed: 2, got: n });
    }
    let scaled: Vec<Vector3<T>> = obs.iter().zip(&depths.ankle).map(|(o, &l)| o.ankle.homogeneous() * l).collect();
    let m = n * (n - 1) / 2;
    let mut b = DMatrix::zeros(m, 2);
    let mut y = DVector::zeros(m);
    let mut row = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let r = v_tilde.component_mul(&(scaled[i] - scaled[j]));
            b[(row, 0)] = r[0];
            b[(row, 1)] = r[1];
            y[row] = -r[2];
            row += 1;
        }
    }
    Ok(FocalSystem { b, y })
}

/// Solves the focal system for `(fx, fy)`. With `fx_eq_fy` the two columns
/// are summed into one unknown.
pub fn solve_focal<T: Real>(sys: &FocalSystem<T>, fx_eq_fy: bool) -> Result<(T, T)> {
    let unknowns = if fx_eq_fy { 1 } else { 2 };
    if sys.b.nrows() < unknowns {
        // one row per pair; 1 row needs 2 people, 2 rows need 3
        let needed = if fx_eq_fy { 2 } else { 3 };
        return Err(Error::InsufficientObservations { needed, got: people_for_pairs(sys.b.nrows()) });
    }
    let (s1, s2) = if fx_eq_fy {
        let col = sys.b.column(0) + sys.b.column(1);
        let nn = col.norm_squared();
        let scale = sys.y.norm_squared().max(T::one());
        if !(nn > scale * lit(linalg::RANK_TOL * linalg::RANK_TOL)) {
            return Err(Failure::RankDeficient.into());
        }
        let s = col.dot(&sys.y) / nn;
        (s, s)
    } else {
        let s = linalg::lstsq(&sys.b, &sys.y)?;
        (s[0], s[1])
    };
    if !(s1 > T::zero() && s2 > T::zero()) || !s1.is_finite() || !s2.is_finite() {
        return Err(Failure::NonPositiveFocal.into());
    }
    Ok((T::one() / s1.sqrt(), T::one() / s2.sqrt()))
}

fn people_for_pairs(pairs: usize) -> usize {
    (1..).take_while(|n| n * (n - 1) / 2 <= pairs).last().unwrap_or(1)
}

pub(crate) fn focal_residual<T: Real>(sys: &FocalSystem<T>, fx: T, fy: T) -> T {
    let s = DVector::from_vec(vec![T::one() / (fx * fx), T::one() / (fy * fy)]);
    let r = (&sys.b * s - &sys.y).norm();
    let yn = sys.y.norm();
    if yn > T::zero() {
        r / yn
    } else {
        r
    }
}

/// Signed scale `mu` with `|mu| = sqrt(v^T W v)`, so that
/// `N = K^-1 v_tilde / mu` has unit norm; the sign makes all depths positive.
pub fn recover_scale<T: Real>(v_tilde: &Vector3<T>, w_diag: &Vector3<T>, depths: &ScaledDepths<T>) -> Result<T> {
    let q = v_tilde.component_mul(v_tilde).dot(w_diag);
    if !(q > T::zero()) || !q.is_finite() {
        return Err(Failure::RankDeficient.into());
    }
    let magnitude = q.sqrt();
    let all = depths.ankle.iter().chain(&depths.shoulder);
    if all.clone().all(|&l| l > T::zero()) {
        Ok(magnitude)
    } else if all.clone().all(|&l| l < T::zero()) {
        Ok(-magnitude)
    } else {
        Err(Failure::Cheirality.into())
    }
}

/// Back-projects every person with metric depths `(lambda_T, lambda_B)`.
pub fn reconstruct<T: Real>(
    intrinsics: &CameraIntrinsics<T>,
    depths: &[(T, T)],
    obs: &[PersonObservation<T>],
) -> Result<Reconstruction<T>> {
    if depths.len() != obs.len() {
        return Err(Error::invalid("depth count does not match observation count"));
    }
    check_centered(obs)?;
    let mut people = Vec::with_capacity(obs.len());
    for (&(lt, lb), o) in depths.iter().zip(obs) {
        if !(lt > T::zero() && lb > T::zero()) {
            return Err(Failure::Cheirality.into());
        }
        people.push(ReconstructedPerson {
            lambda_b: lb,
            lambda_t: lt,
            ankle: intrinsics.ray(&o.ankle) * lb,
            shoulder: intrinsics.ray(&o.shoulder) * lt,
        });
    }
    Ok(Reconstruction { people })
}

/// `rho = h/2 - N^T (mean(X_B) + mean(X_T)) / 2`.
pub fn plane_offset<T: Real>(normal: &Vector3<T>, reconstruction: &Reconstruction<T>, h: HeightPrior<T>) -> Result<T> {
    if reconstruction.is_empty() {
        return Err(Error::invalid("empty reconstruction"));
    }
    let n: T = lit(reconstruction.len() as f64);
    let mut sum = Vector3::zeros();
    for p in &reconstruction.people {
        sum += p.ankle + p.shoulder;
    }
    let half: T = lit(0.5);
    Ok(half * h.get() - normal.dot(&(sum / n)) * half)
}

/// Everything downstream of known intrinsics and `v_tilde`: scale, normal,
/// reconstruction and plane offset.
pub fn complete_calibration<T: Real>(
    obs: &[PersonObservation<T>],
    v_tilde: &Vector3<T>,
    depths: &ScaledDepths<T>,
    intrinsics: CameraIntrinsics<T>,
    h: HeightPrior<T>,
    residuals: Residuals<T>,
) -> Result<CalibrationResult<T>> {
    let mu = recover_scale(v_tilde, &intrinsics.w_diag(), depths)?;
    let normal = (intrinsics.k_inv() * v_tilde / mu).normalize();
    let metric: Vec<(T, T)> = depths.shoulder.iter().zip(&depths.ankle).map(|(&lt, &lb)| (lt / mu, lb / mu)).collect();
    let reconstruction = reconstruct(&intrinsics, &metric, obs)?;
    let rho = plane_offset(&normal, &reconstruction, h)?;
    if !(rho > T::zero()) {
        return Err(Failure::NonPositiveOffset.into());
    }
    let plane = GroundPlane::new(normal, rho)?;
    Ok(CalibrationResult { intrinsics, plane, reconstruction, mu, residuals })
}

/// Root-mean-square distance of all measured points from the principal point.
pub fn normalization_scale<T: Real>(obs: &[PersonObservation<T>]) -> T {
    let mut sum = T::zero();
    for o in obs {
        for p in [o.ankle, o.shoulder] {
            sum += p.u * p.u + p.v * p.v;
        }
    }
    let n: T = lit((2 * obs.len()).max(1) as f64);
    (sum / n).sqrt()
}

/// Runs `pipeline` on observations divided by their [`normalization_scale`],
/// then maps the focal lengths back to pixels. Depths, the plane and the
/// reconstruction do not depend on the pixel unit; the residuals are
/// reported in the normalized units.
pub fn with_normalized_pixels<T: Real>(
    obs: &[PersonObservation<T>],
    pipeline: impl FnOnce(&[PersonObservation<T>]) -> Result<CalibrationResult<T>>,
) -> Result<CalibrationResult<T>> {
    let s = normalization_scale(obs);
    if !(s > T::zero()) || !s.is_finite() {
        return Err(Failure::RankDeficient.into());
    }
    let scaled: Vec<PersonObservation<T>> = obs
        .iter()
        .map(|o| PersonObservation {
            ankle: PixelPoint::centered(o.ankle.u / s, o.ankle.v / s),
            shoulder: PixelPoint::centered(o.shoulder.u / s, o.shoulder.v / s),
        })
        .collect();
    let mut cal = pipeline(&scaled)?;
    let k = cal.intrinsics;
    cal.intrinsics = CameraIntrinsics::principal_centered(k.fx * s, k.fy * s)?;
    Ok(cal)
}

/// The linear pipeline in the pixel units it is given.
pub fn calibrate_unnormalized<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
) -> Result<CalibrationResult<T>> {
    let needed = if fx_eq_fy { 2 } else { 3 };
    if obs.len() < needed {
        return Err(Error::InsufficientObservations { needed, got: obs.len() });
    }
    let a = build_vanishing_system(obs)?;
    let vs = solve_vanishing_direction(&a)?;
    let depths = solve_scaled_depths(obs, &vs.v_tilde, h)?;
    let sys = build_focal_system(&vs.v_tilde, obs, &depths)?;
    let (fx, fy) = solve_focal(&sys, fx_eq_fy)?;
    let intrinsics = CameraIntrinsics::principal_centered(fx, fy)?;
    let residuals = Residuals { vanishing: vs.smallest_singular_value, focal: focal_residual(&sys, fx, fy) };
    complete_calibration(obs, &vs.v_tilde, &depths, intrinsics, h, residuals)
}

/// Full pipeline on principal-centered observations, run on pixel
/// coordinates rescaled to unit RMS radius.
///
/// Needs at least two people when `fx_eq_fy`, three otherwise.
pub fn calibrate_batch<T: Real>(
    obs: &[PersonObservation<T>],
    h: HeightPrior<T>,
    fx_eq_fy: bool,
) -> Result<CalibrationResult<T>> {
    let needed = if fx_eq_fy { 2 } else { 3 };
    if obs.len() < needed {
        return Err(Error::InsufficientObservations { needed, got: obs.len() });
    }
    check_centered(obs)?;
    with_normalized_pixels(obs, |o| calibrate_unnormalized(o, h, fx_eq_fy))
}

/// Symmetric matrix of ankle-to-ankle distances.
pub fn pairwise_distances<T: Real>(reconstruction: &Reconstruction<T>) -> DMatrix<T> {
    let n = reconstruction.len();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dij = (reconstruction.people[i].ankle - reconstruction.people[j].ankle).norm();
            d[(i, j)] = dij;
            d[(j, i)] = dij;
        }
    }
    d
}
