//! Small dense least-squares helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::types::{lit, Real};
use crate::{Failure, Result};

/// Singular-value ratio (smallest relevant / largest) below which a system is
/// treated as rank-deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Unit minimizer of `||A x||` together with the singular spectrum bounds.
#[derive(Debug, Clone)]
pub struct NullVector<T: Real> {
    pub vector: DVector<T>,
    /// Smallest singular value (the minimized residual).
    pub smallest: T,
    /// Second-smallest singular value over the largest; small values mean
    /// the minimizer is not unique.
    pub uniqueness: T,
}

fn all_finite<T: Real>(m: &DMatrix<T>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Right singular vector of the smallest singular value of `a`.
///
/// Matrices with fewer rows than columns are padded with zero rows so the
/// full right basis is available. Fails when the minimizer is not unique
/// (second-smallest singular value below `RANK_TOL` of the largest).
pub fn null_vector<T: Real>(a: &DMatrix<T>) -> Result<NullVector<T>> {
    let n = a.ncols();
    if n == 0 || !all_finite(a) {
        return Err(Failure::RankDeficient.into());
    }
    let padded;
    let a = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        padded = p;
        &padded
    } else {
        a
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or(Failure::RankDeficient)?;
    let s = &svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[i].partial_cmp(&s[j]).unwrap_or(std::cmp::Ordering::Equal));
    let largest = s[order[order.len() - 1]];
    if !(largest > T::zero()) {
        return Err(Failure::RankDeficient.into());
    }
    let uniqueness = if order.len() >= 2 { s[order[1]] / largest } else { T::one() };
    if uniqueness < lit(RANK_TOL) {
        return Err(Failure::RankDeficient.into());
    }
    let row = v_t.row(order[0]).transpose();
    let norm = row.norm();
    Ok(NullVector { vector: row / norm, smallest: s[order[0]], uniqueness })
}

/// Least-squares solution of `a x = b` through the SVD.
///
/// Fails when `a` is rank-deficient in the `RANK_TOL` sense.
pub fn lstsq<T: Real>(a: &DMatrix<T>, b: &DVector<T>) -> Result<DVector<T>> {
    if a.nrows() < a.ncols() || a.nrows() != b.len() || !all_finite(a) {
        return Err(Failure::RankDeficient.into());
    }
    if !b.iter().all(|x| x.is_finite()) {
        return Err(Failure::RankDeficient.into());
    }
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let largest = s.iter().copied().fold(T::zero(), |m, x| if x > m { x } else { m });
    let smallest = s.iter().copied().fold(largest, |m, x| if x < m { x } else { m });
    if !(largest > T::zero()) || smallest / largest < lit(RANK_TOL) {
        return Err(Failure::RankDeficient.into());
    }
    svd.solve(b, T::zero()).map_err(|_| Failure::RankDeficient.into())
}
