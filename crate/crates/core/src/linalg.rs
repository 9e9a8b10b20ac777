//! Dense helpers shared by the geometry, cocycle and Ginelli modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn check_finite(a: &Mat) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Singular values in non-increasing order.
pub fn singular_values(a: &Mat) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = SVD::new(a.clone(), false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Operator 2-norm (largest singular value). Empty matrices have norm 0.
pub fn spectral_norm(a: &Mat) -> Result<f64> {
    check_finite(a)?;
    Ok(singular_values(a).first().copied().unwrap_or(0.0))
}

/// `sigma_max / sigma_min` of a square matrix; infinite when singular.
pub fn condition_number(a: &Mat) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Thin Householder QR with the diagonal of `R` forced non-negative.
///
/// For a `d x k` input with `k <= d` this returns `Q` (`d x k`, orthonormal
/// columns) and upper-triangular `R` (`k x k`).
pub fn qr_positive(a: &Mat) -> (Mat, Mat) {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..r.nrows() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Numerical rank test: smallest singular value above `rel_tol` times the largest.
pub fn has_full_column_rank(a: &Mat, rel_tol: f64) -> bool {
    if a.ncols() == 0 {
        return true;
    }
    if a.ncols() > a.nrows() {
        return false;
    }
    let s = singular_values(a);
    let hi = s[0];
    hi > 0.0 && s[s.len() - 1] > rel_tol * hi
}

/// Eigenvectors of the symmetric part of `p` whose eigenvalues exceed `threshold`,
/// ordered by decreasing eigenvalue.
pub fn dominant_eigenvectors(p: &Mat, threshold: f64) -> Mat {
    let d = p.nrows();
    let sym = (p + p.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..d).filter(|&i| eig.eigenvalues[i] > threshold).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut out = Mat::zeros(d, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        out.set_column(c, &eig.eigenvectors.column(i));
    }
    out
}

/// Orthonormal basis of the orthogonal complement of the span of `q`'s columns
/// (`q` must have orthonormal columns).
pub fn orthogonal_complement(q: &Mat) -> Mat {
    let d = q.nrows();
    let p = Mat::identity(d, d) - q * q.transpose();
    dominant_eigenvectors(&p, 0.5)
}

/// Uniform sample from the closed ball of radius `radius` in `R^dim`:
/// a normalized Gaussian direction scaled by `radius * U^(1/dim)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vector {
    loop {
        let g = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = g.norm();
        if n > 0.0 {
            let u: f64 = rng.random();
            return g * (radius * u.powf(1.0 / dim as f64) / n);
        }
    }
}

/// `d x n` matrix whose columns are independent uniform samples from the ball.
pub fn uniform_ball_tuple<R: Rng + ?Sized>(rng: &mut R, dim: usize, count: usize, radius: f64) -> Mat {
    let mut m = Mat::zeros(dim, count);
    for j in 0..count {
        m.set_column(j, &uniform_in_ball(rng, dim, radius));
    }
    m
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Mat {
    let g = Mat::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    qr_positive(&g).0
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Largest absolute entry of `q^T q - I`.
pub fn orthonormality_defect(q: &Mat) -> f64 {
    let k = q.ncols();
    (q.transpose() * q - Mat::identity(k, k)).amax()
}
