//! Projector-based geometry of linear subspaces of `R^d`.
//!
//! A [`Subspace`] is stored as an orthonormal basis; its orthogonal projector
//! is `basis * basis^T`. Distances and angles are operator 2-norms of
//! projector expressions.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};
use crate::pattern::DegeneracyPattern;

pub use crate::linalg::spectral_norm;

/// Relative singular-value threshold for linear independence.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Largest condition number accepted by [`apply_map`].
pub const MAX_MAP_CONDITION: f64 = 1e15;

/// Default tolerance for [`intersect_alternating`].
pub const DEFAULT_INTERSECTION_TOL: f64 = 1e-12;

const MAX_ALTERNATING_ITERATIONS: usize = 2_000_000;

/// A linear subspace of `R^d` with an orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    /// The zero subspace `{0}` of `R^d`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self { basis: Mat::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { basis: Mat::identity(ambient_dim, ambient_dim) }
    }

    /// Span of the given coordinate axes.
    pub fn coordinate(ambient_dim: usize, axes: &[usize]) -> Self {
        let mut basis = Mat::zeros(ambient_dim, axes.len());
        for (c, &a) in axes.iter().enumerate() {
            basis[(a, c)] = 1.0;
        }
        Self { basis }
    }

    /// Span of the columns of `vectors`, which must be linearly independent.
    pub fn span(vectors: &Mat) -> Result<Self> {
        linalg::check_finite(vectors)?;
        if !linalg::has_full_column_rank(vectors, RANK_TOLERANCE) {
            return Err(Error::Degenerate { group: 0 });
        }
        Ok(Self::span_unchecked(vectors))
    }

    /// Span of the columns of `vectors` without a rank test.
    pub(crate) fn span_unchecked(vectors: &Mat) -> Self {
        if vectors.ncols() == 0 {
            return Self::zero(vectors.nrows());
        }
        Self { basis: linalg::qr_positive(vectors).0 }
    }

    pub fn from_vector(v: &Vector) -> Result<Self> {
        Self::span(&Mat::from_column_slice(v.len(), 1, v.as_slice()))
    }

    /// Wraps a basis that is already orthonormal (checked to 1e-10).
    pub fn from_orthonormal(basis: Mat) -> Result<Self> {
        let defect = linalg::orthonormality_defect(&basis);
        if defect > 1e-10 {
            return Err(Error::Reference { deviation: defect });
        }
        Ok(Self { basis })
    }

    /// Extracts the subspace of an approximate orthogonal projector by keeping
    /// eigenvectors with eigenvalue above 1/2.
    pub fn from_projector(p: &Mat) -> Self {
        Self { basis: linalg::dominant_eigenvectors(p, 0.5) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    pub fn complement(&self) -> Self {
        Self { basis: linalg::orthogonal_complement(&self.basis) }
    }

    /// Relative length of the part of `v` outside the subspace.
    pub fn residual(&self, v: &Vector) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        (v - &self.basis * (self.basis.transpose() * v)).norm() / n
    }

    /// Orthogonal direct sum of two mutually orthogonal subspaces, or the span of
    /// both bases in general.
    pub fn sum(&self, other: &Self) -> Result<Self> {
        check_same_ambient(self, other)?;
        let mut m = Mat::zeros(self.ambient_dim(), self.dim() + other.dim());
        m.columns_mut(0, self.dim()).copy_from(&self.basis);
        m.columns_mut(self.dim(), other.dim()).copy_from(&other.basis);
        Self::span(&m)
    }
}

/// Ordered tuple of vectors in `R^d`, stored as matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTuple {
    vectors: Mat,
}

impl VectorTuple {
    pub fn new(vectors: Mat) -> Self {
        Self { vectors }
    }

    pub fn standard_basis(dim: usize) -> Self {
        Self { vectors: Mat::identity(dim, dim) }
    }

    pub fn from_columns(columns: &[Vector]) -> Result<Self> {
        let dim = columns.first().map_or(0, |c| c.len());
        if let Some(bad) = columns.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: bad.len() });
        }
        Ok(Self { vectors: Mat::from_columns(columns) })
    }

    pub fn vectors(&self) -> &Mat {
        &self.vectors
    }

    pub fn into_matrix(self) -> Mat {
        self.vectors
    }

    pub fn ambient_dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.ncols() == 0
    }

    /// Columns of block `i` under `pattern`.
    pub fn group(&self, pattern: &DegeneracyPattern, i: usize) -> Mat {
        let r = pattern.block_range(i);
        self.vectors.columns(r.start, r.len()).into_owned()
    }

    /// The tuple mapped by `a`.
    pub fn mapped(&self, a: &Mat) -> Self {
        Self { vectors: a * &self.vectors }
    }
}

/// Nested spaces `U_1 ⊂ ... ⊂ U_p` with orthogonal blocks `F_i`
/// such that `U_i = F_1 ⊕ ... ⊕ F_i`.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub pattern: DegeneracyPattern,
    pub spaces: Vec<Subspace>,
    pub blocks: Vec<Subspace>,
    basis: Mat,
}

impl Filtration {
    /// Orthonormal basis whose leading columns span the filtration spaces.
    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    /// Projector onto block `F_i`.
    pub fn block_projector(&self, i: usize) -> Mat {
        self.blocks[i].projector()
    }

    /// Projector onto `U_i`.
    pub fn space_projector(&self, i: usize) -> Mat {
        self.spaces[i].projector()
    }
}

fn check_same_ambient(m: &Subspace, n: &Subspace) -> Result<()> {
    if m.ambient_dim() != n.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: n.ambient_dim() });
    }
    Ok(())
}

/// `‖(I - P_N) Q_M‖`: the sine of the largest principal angle when dimensions agree.
fn one_sided_gap(m: &Subspace, n: &Subspace) -> f64 {
    let qm = m.basis();
    let qn = n.basis();
    let r = qm - qn * (qn.transpose() * qm);
    linalg::singular_values(&r).first().copied().unwrap_or(0.0)
}

/// Distance `‖P_M - P_N‖` between two subspaces, a value in `[0, 1]`.
pub fn distance(m: &Subspace, n: &Subspace) -> Result<f64> {
    check_same_ambient(m, n)?;
    if m.dim() != n.dim() {
        return Ok(1.0);
    }
    if m.dim() == 0 {
        return Ok(0.0);
    }
    // Equal dimensions: both one-sided gaps coincide with the projector distance.
    let d = one_sided_gap(m, n).max(one_sided_gap(n, m));
    Ok(d.clamp(0.0, 1.0))
}

/// Cosine of the minimal angle, `‖P_M P_N‖`; zero if either space is `{0}`.
pub fn cos_min_angle(m: &Subspace, n: &Subspace) -> Result<f64> {
    check_same_ambient(m, n)?;
    if m.dim() == 0 || n.dim() == 0 {
        return Ok(0.0);
    }
    let c = m.basis().transpose() * n.basis();
    Ok(linalg::singular_values(&c)[0].min(1.0))
}

/// Cosine of the angle modulo the intersection, `‖P_M P_N - P_{M∩N}‖`.
///
/// The intersection is obtained with [`intersect_alternating`] at tolerance `tol`.
pub fn cos_angle(m: &Subspace, n: &Subspace, tol: f64) -> Result<f64> {
    check_same_ambient(m, n)?;
    if m.dim() == 0 || n.dim() == 0 {
        return Ok(0.0);
    }
    let s = intersect_alternating(m, n, tol)?;
    let r = m.projector() * n.projector() - s.projector();
    Ok(linalg::singular_values(&r)[0].min(1.0))
}

/// Intersection `M ∩ N` by von Neumann's method of alternating projections.
///
/// Iterates `X_k = (P_M P_N)^k` until successive iterates differ by less than
/// `tol / 10` and the subspace `S` extracted from `X_k` by spectral
/// thresholding satisfies `‖X_k - P_S‖ <= tol`. Iteration stops with an error
/// at a cap of `10 ⌈log(tol) / log(c_est)⌉`, where `c_est` is the observed
/// contraction of successive differences.
pub fn intersect_alternating(m: &Subspace, n: &Subspace, tol: f64) -> Result<Subspace> {
    check_same_ambient(m, n)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let d = m.ambient_dim();
    if m.dim() == 0 || n.dim() == 0 {
        return Ok(Subspace::zero(d));
    }
    let step = m.projector() * n.projector();
    let first_gap = (&step - Mat::identity(d, d)).norm();
    if first_gap == 0.0 {
        return Ok(Subspace::full(d));
    }
    let mut current = &step * &step;
    // Frobenius norms bound the spectral norm from above and are much cheaper.
    let mut gap = (&current - &step).norm();
    let mut ratio = gap / first_gap;
    let mut iterations = 2;

    // Differences shrink like c^{2k}, so their ratio estimates c^2. The first
    // ratio is biased low when some principal angles are small, hence the
    // estimate, and the cap derived from it, is refreshed every iteration.
    let cap_for = |ratio: f64| -> usize {
        let c_est = ratio.sqrt().min(1.0);
        if c_est <= 0.0 {
            2
        } else if c_est >= 1.0 {
            MAX_ALTERNATING_ITERATIONS
        } else {
            let k = (tol.ln() / c_est.ln()).ceil().max(1.0);
            ((10.0 * k).min(MAX_ALTERNATING_ITERATIONS as f64) as usize).max(2)
        }
    };
    while iterations < cap_for(ratio) {
        // ‖X_k - P_S‖ is about gap / (1 - c^2); only test once that is small.
        if gap < tol / 10.0 && (ratio >= 1.0 || gap <= tol * (1.0 - ratio)) {
            let s = Subspace::from_projector(&current);
            if linalg::singular_values(&(&current - s.projector()))[0] <= tol {
                return Ok(s);
            }
        }
        let next = &current * &step;
        let next_gap = (&next - &current).norm();
        if gap > 0.0 {
            ratio = ratio.max(next_gap / gap);
        }
        gap = next_gap;
        current = next;
        iterations += 1;
    }

    let s = Subspace::from_projector(&current);
    let residual = linalg::singular_values(&(&current - s.projector()))[0];
    if residual > tol {
        return Err(Error::IterationLimit { iterations, residual });
    }
    Ok(s)
}

/// Gram-Schmidt procedure for subspaces: the filtration generated by the
/// groups of `tuple` together with its orthogonal blocks.
pub fn gram_schmidt(tuple: &VectorTuple, pattern: &DegeneracyPattern) -> Result<Filtration> {
    if tuple.len() != pattern.total() {
        return Err(Error::DimensionMismatch { expected: pattern.total(), found: tuple.len() });
    }
    if tuple.len() > tuple.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: tuple.ambient_dim(), found: tuple.len() });
    }
    linalg::check_finite(tuple.vectors())?;
    for (group, &upto) in pattern.cumulative().iter().enumerate() {
        let prefix = tuple.vectors().columns(0, upto).into_owned();
        if !linalg::has_full_column_rank(&prefix, RANK_TOLERANCE) {
            return Err(Error::Degenerate { group });
        }
    }
    let (q, _) = linalg::qr_positive(tuple.vectors());
    let spaces = pattern
        .cumulative()
        .iter()
        .map(|&k| Subspace { basis: q.columns(0, k).into_owned() })
        .collect();
    let blocks = (0..pattern.len())
        .map(|i| {
            let r = pattern.block_range(i);
            Subspace { basis: q.columns(r.start, r.len()).into_owned() }
        })
        .collect();
    Ok(Filtration { pattern: pattern.clone(), spaces, blocks, basis: q })
}

/// Image `A(M)` of a subspace under an invertible map.
pub fn apply_map(a: &Mat, m: &Subspace) -> Result<Subspace> {
    if a.nrows() != a.ncols() || a.nrows() != m.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: m.ambient_dim(), found: a.nrows() });
    }
    linalg::check_finite(a)?;
    let condition = linalg::condition_number(a);
    if !(condition <= MAX_MAP_CONDITION) {
        return Err(Error::Singular { condition });
    }
    Ok(Subspace::span_unchecked(&(a * m.basis())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SVD;

    fn line(theta: f64) -> Subspace {
        Subspace::from_vector(&Vector::from_vec(vec![theta.cos(), theta.sin()])).unwrap()
    }

    #[test]
    fn distance_trivial_cases() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(distance(&e1, &e1).unwrap(), 0.0);
        assert!((distance(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(distance(&e1, &Subspace::full(2)).unwrap(), 1.0);
        assert_eq!(distance(&Subspace::zero(3), &Subspace::zero(3)).unwrap(), 0.0);
    }

    #[test]
    fn distance_of_rotated_line_matches_projector_svd() {
        let theta: f64 = 0.3;
        let m = Subspace::coordinate(2, &[0]);
        let n = line(theta);
        // Oracle: dense SVD of the explicit projector difference.
        let pm = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let (c, s) = (theta.cos(), theta.sin());
        let pn = Mat::from_row_slice(2, 2, &[c * c, c * s, c * s, s * s]);
        let oracle = SVD::new(pm - pn, false, false).singular_values.max();
        let got = distance(&m, &n).unwrap();
        assert!((got - oracle).abs() < 1e-14);
        assert!((got - theta.sin().abs()).abs() < 1e-14);
    }

    #[test]
    fn distance_rejects_mismatched_ambient() {
        let r = distance(&Subspace::full(2), &Subspace::full(3));
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn min_angle_cases() {
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert!((cos_min_angle(&e1, &e1).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(cos_min_angle(&e1, &e2).unwrap(), 0.0);
        assert_eq!(cos_min_angle(&e1, &Subspace::zero(2)).unwrap(), 0.0);
    }

    #[test]
    fn min_angle_matches_grid_maximization() {
        let theta: f64 = 0.3;
        let got = cos_min_angle(&Subspace::coordinate(2, &[0]), &line(theta)).unwrap();
        assert!((got - theta.cos()).abs() < 1e-14);

        // Two planes in R^3: maximize |<x, y>| over unit vectors on a grid.
        let m = Subspace::span(&Mat::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        let n = Subspace::span(&Mat::from_column_slice(3, 2, &[1.0, 1.0, 1.0, 0.0, 1.0, -2.0])).unwrap();
        let steps = 2000;
        let mut best: f64 = 0.0;
        for i in 0..steps {
            let a = std::f64::consts::PI * i as f64 / steps as f64;
            let x = m.basis() * Vector::from_vec(vec![a.cos(), a.sin()]);
            let proj = n.basis().transpose() * &x;
            best = best.max(proj.norm());
        }
        let got = cos_min_angle(&m, &n).unwrap();
        assert!((got - best).abs() < 1e-5, "{got} vs {best}");
    }

    #[test]
    fn angle_modulo_intersection() {
        let xy = Subspace::coordinate(3, &[0, 1]);
        let xz = Subspace::coordinate(3, &[0, 2]);
        assert!(cos_angle(&xy, &xz, 1e-12).unwrap() < 1e-12);
        let e1 = Subspace::coordinate(2, &[0]);
        let e2 = Subspace::coordinate(2, &[1]);
        assert_eq!(cos_angle(&e1, &e2, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn intersection_trivial_cases() {
        let xy = Subspace::coordinate(3, &[0, 1]);
        let xz = Subspace::coordinate(3, &[0, 2]);
        let s = intersect_alternating(&xy, &xz, 1e-12).unwrap();
        assert_eq!(s.dim(), 1);
        assert!(distance(&s, &Subspace::coordinate(3, &[0])).unwrap() < 1e-12);

        let m = Subspace::span(&Mat::from_column_slice(3, 2, &[1.0, 2.0, 0.5, -1.0, 0.0, 3.0])).unwrap();
        let same = intersect_alternating(&m, &m, 1e-12).unwrap();
        assert!(distance(&same, &m).unwrap() < 1e-12);
    }

    #[test]
    fn intersection_rejects_bad_tolerance() {
        let m = Subspace::full(2);
        assert!(matches!(intersect_alternating(&m, &m, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn gram_schmidt_small_example() {
        let t = VectorTuple::new(Mat::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let f = gram_schmidt(&t, &DegeneracyPattern::simple(2)).unwrap();
        assert!(distance(&f.blocks[0], &Subspace::coordinate(2, &[0])).unwrap() < 1e-15);
        assert!(distance(&f.blocks[1], &Subspace::coordinate(2, &[1])).unwrap() < 1e-15);
    }

    #[test]
    fn gram_schmidt_reports_offending_group() {
        let t = VectorTuple::new(Mat::from_column_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0]));
        let r = gram_schmidt(&t, &DegeneracyPattern::new(vec![1, 1, 1]).unwrap());
        assert_eq!(r.unwrap_err(), Error::Degenerate { group: 2 });
    }

    #[test]
    fn apply_map_cases() {
        let m = Subspace::coordinate(2, &[0]);
        let id = Mat::identity(2, 2);
        assert!(distance(&apply_map(&id, &m).unwrap(), &m).unwrap() < 1e-15);
        let a = Mat::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!(distance(&apply_map(&a, &m).unwrap(), &m).unwrap() < 1e-15);
        let singular = Mat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(apply_map(&singular, &m), Err(Error::Singular { .. })));
    }

    #[test]
    fn apply_map_matches_direct_multiplication() {
        let a = Mat::from_row_slice(3, 3, &[1.0, 2.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.0, 1.0]);
        let v = Vector::from_vec(vec![0.3, -1.2, 0.7]);
        let m = Subspace::from_vector(&v).unwrap();
        let image = apply_map(&a, &m).unwrap();
        let w = &a * &v;
        let oracle = w.normalize();
        let got = image.basis().column(0).into_owned();
        assert!((got.dot(&oracle).abs() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_subspace_behaves() {
        let z = Subspace::zero(3);
        assert_eq!(z.dim(), 0);
        assert_eq!(z.projector(), Mat::zeros(3, 3));
        assert_eq!(z.complement().dim(), 3);
    }
}
