//! δ-admissibility of vector tuples relative to a reference orthonormal basis.
//!
//! A tuple `(b)` is δ-admissible with respect to `(c)` when
//! `d(Ū_i^{(b)}, Ū_i^{(c)})^2 <= 1 - δ^2` for every level `i < p`. We report
//! the largest such δ as a single scalar.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cocycle::svd_ordered;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::pattern::DegeneracyPattern;
use crate::subspace::{distance, gram_schmidt, Subspace, VectorTuple, RANK_TOLERANCE};

/// Slack added to the right-hand side of the propagation bound.
pub const PROPAGATION_SLACK: f64 = 1e-9;

/// Tolerance for membership in the extension domain.
pub const DOMAIN_TOLERANCE: f64 = 1e-10;

const SAMPLES_PER_CHUNK: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    /// Largest δ for which the tuple is δ-admissible; 0 if it is not admissible at all.
    pub delta_max: f64,
    /// `d(Ū_i^{(b)}, Ū_i^{(c)})` for `i < p`.
    pub per_level_distance: Vec<f64>,
    pub independent: bool,
    /// The same δ computed from the smallest projected mass
    /// `min_{x ∈ Ū_i^{(b)}, |x| = 1} Σ_{j <= i} |<x, c_j>|^2`.
    pub lemma_delta: f64,
}

fn check_reference(reference: &VectorTuple) -> Result<()> {
    let deviation = linalg::orthonormality_defect(reference.vectors());
    if deviation > 1e-10 {
        return Err(Error::Reference { deviation });
    }
    Ok(())
}

fn check_shapes(tuple: &VectorTuple, reference: &VectorTuple, pattern: &DegeneracyPattern) -> Result<()> {
    if tuple.ambient_dim() != reference.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: reference.ambient_dim(), found: tuple.ambient_dim() });
    }
    if tuple.len() != pattern.total() {
        return Err(Error::DimensionMismatch { expected: pattern.total(), found: tuple.len() });
    }
    if reference.len() < pattern.total() {
        return Err(Error::DimensionMismatch { expected: pattern.total(), found: reference.len() });
    }
    Ok(())
}

fn prefix_space(m: &Mat, k: usize) -> Subspace {
    Subspace::from_orthonormal(m.columns(0, k).into_owned()).expect("orthonormal columns")
}

/// Admissibility of `tuple` with respect to the orthonormal `reference`.
pub fn admissibility(
    tuple: &VectorTuple,
    reference: &VectorTuple,
    pattern: &DegeneracyPattern,
) -> Result<AdmissibilityReport> {
    check_shapes(tuple, reference, pattern)?;
    check_reference(reference)?;
    linalg::check_finite(tuple.vectors())?;
    let levels = pattern.len() - 1;
    let independent = linalg::has_full_column_rank(tuple.vectors(), RANK_TOLERANCE);
    if !independent {
        return Ok(AdmissibilityReport {
            delta_max: 0.0,
            per_level_distance: vec![1.0; levels],
            independent,
            lemma_delta: 0.0,
        });
    }
    let filtration = gram_schmidt(tuple, pattern)?;
    let q = filtration.basis();
    let c = reference.vectors();
    let mut per_level_distance = Vec::with_capacity(levels);
    let mut min_mass: f64 = 1.0;
    for &k in &pattern.cumulative()[..levels] {
        per_level_distance.push(distance(&prefix_space(q, k), &prefix_space(c, k))?);
        // Smallest eigenvalue of the projected Gram matrix = σ_min(C_k^T Q_k)^2.
        let proj = c.columns(0, k).transpose() * q.columns(0, k);
        let s = linalg::singular_values(&proj);
        min_mass = min_mass.min(s[s.len() - 1].powi(2));
    }
    let worst = per_level_distance.iter().fold(0.0f64, |a, &b| a.max(b));
    let delta_max = if worst >= 1.0 { 0.0 } else { (1.0 - worst * worst).max(0.0).sqrt() };
    Ok(AdmissibilityReport { delta_max, per_level_distance, independent, lemma_delta: min_mass.clamp(0.0, 1.0).sqrt() })
}

/// One level of the propagation bound
/// `d(Ū_i^{(Ab)}, Ū_i^{(u)}) <= (1/δ) σ_{i+1}^max / σ_i^min`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCheck {
    pub level: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`; negative when the bound is violated.
    pub margin: f64,
}

/// Checks the propagation bound for `A = U Σ V^T` and a tuple admissible
/// with respect to the right singular vectors `(v)`.
pub fn propagation_bound_check(a: &Mat, tuple: &VectorTuple, pattern: &DegeneracyPattern) -> Result<Vec<LevelCheck>> {
    let svd = svd_ordered(a, pattern)?;
    let report = admissibility(tuple, &VectorTuple::new(svd.right.clone()), pattern)?;
    if report.delta_max <= 0.0 {
        return Err(Error::Precondition("tuple is not admissible with respect to the right singular vectors".into()));
    }
    let image = gram_schmidt(&tuple.mapped(a), pattern)?;
    let cumulative = pattern.cumulative();
    (0..pattern.len() - 1)
        .map(|i| {
            let lhs = distance(&image.spaces[i], &prefix_space(&svd.left, cumulative[i]))?;
            let rhs = svd.sigma_max(i + 1) / svd.sigma_min(i) / report.delta_max;
            Ok(LevelCheck { level: i, lhs, rhs, holds: lhs <= rhs + PROPAGATION_SLACK, margin: rhs - lhs })
        })
        .collect()
}

/// Certified lower bound for extendable admissibility.
///
/// `groups[i]` holds the `d_i` vectors of block `i`, which must lie in
/// `span(c_{i_1}, ..., c_{p_{d_p}})`. Each block is extended to a full tuple
/// by prefixing the reference vectors of earlier blocks and completing
/// orthogonally inside that span; the result is the smallest `delta_max` over
/// these extensions.
pub fn extendable_admissibility(groups: &[Mat], reference: &VectorTuple, pattern: &DegeneracyPattern) -> Result<f64> {
    check_reference(reference)?;
    let d = reference.ambient_dim();
    pattern.check_total(d)?;
    if groups.len() != pattern.len() {
        return Err(Error::DimensionMismatch { expected: pattern.len(), found: groups.len() });
    }
    let c = reference.vectors();
    let mut delta: f64 = 1.0;
    for (i, block) in groups.iter().enumerate() {
        let range = pattern.block_range(i);
        if block.nrows() != d || block.ncols() != range.len() {
            return Err(Error::DimensionMismatch { expected: range.len(), found: block.ncols() });
        }
        linalg::check_finite(block)?;
        let tail = c.columns(range.start, d - range.start);
        for v in block.column_iter() {
            let n = v.norm();
            let residual = if n > 0.0 { (v - tail * (tail.transpose() * v)).norm() / n } else { 0.0 };
            if residual > DOMAIN_TOLERANCE {
                return Err(Error::Domain { block: i, residual });
            }
        }

        let mut ext = Mat::zeros(d, d);
        ext.columns_mut(0, range.start).copy_from(&c.columns(0, range.start));
        ext.columns_mut(range.start, range.len()).copy_from(block);
        let mut filled = range.end;
        // Orthonormal basis of what has been placed so far, for the completion.
        let mut placed = linalg::qr_positive(&ext.columns(0, filled).into_owned()).0;
        let candidates = (range.end..d).chain(range.clone());
        for j in candidates {
            if filled == d {
                break;
            }
            let v = c.column(j);
            let r = v - &placed * (placed.transpose() * v);
            if r.norm() > 1e-8 {
                let r = r.normalize();
                ext.set_column(filled, &r);
                filled += 1;
                placed = linalg::qr_positive(&ext.columns(0, filled).into_owned()).0;
            }
        }
        let report = if filled == d {
            admissibility(&VectorTuple::new(ext), reference, pattern)?.delta_max
        } else {
            0.0
        };
        delta = delta.min(report);
    }
    Ok(delta)
}

/// Monte Carlo estimate of the measure of tuples in `B(radius)^d` that are
/// not δ-admissible with respect to the standard basis.
///
/// Samples are drawn in chunks of 1000, each from a ChaCha stream selected by
/// its chunk index, so the result does not depend on the thread count.
pub fn sample_nonadmissible_fraction(
    d: usize,
    radius: f64,
    pattern: &DegeneracyPattern,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    sample_fraction(d, radius, pattern, delta, n_samples, seed, false)
}

/// As [`sample_nonadmissible_fraction`] for extendable admissibility: block `i`
/// is drawn uniformly from the ball of `span(e_{i_1}, ..., e_d)`.
pub fn sample_nonextendable_fraction(
    d: usize,
    radius: f64,
    pattern: &DegeneracyPattern,
    delta: f64,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    sample_fraction(d, radius, pattern, delta, n_samples, seed, true)
}

fn sample_fraction(
    d: usize,
    radius: f64,
    pattern: &DegeneracyPattern,
    delta: f64,
    n_samples: usize,
    seed: u64,
    extendable: bool,
) -> Result<f64> {
    if d < 2 {
        return Err(Error::InvalidArgument("dimension must be at least 2".into()));
    }
    pattern.check_total(d)?;
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta must lie in [0, 1], got {delta}")));
    }
    if n_samples < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 samples, got {n_samples}")));
    }
    let reference = VectorTuple::standard_basis(d);
    let chunks = n_samples.div_ceil(SAMPLES_PER_CHUNK);
    let failures = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = SAMPLES_PER_CHUNK.min(n_samples - chunk * SAMPLES_PER_CHUNK);
            let mut bad = 0;
            for _ in 0..count {
                let delta_max = if extendable {
                    let groups: Vec<Mat> = (0..pattern.len())
                        .map(|i| {
                            let r = pattern.block_range(i);
                            let mut m = Mat::zeros(d, r.len());
                            let sub = linalg::uniform_ball_tuple(&mut rng, d - r.start, r.len(), radius);
                            m.rows_mut(r.start, d - r.start).copy_from(&sub);
                            m
                        })
                        .collect();
                    extendable_admissibility(&groups, &reference, pattern)?
                } else {
                    let t = VectorTuple::new(linalg::uniform_ball_tuple(&mut rng, d, d, radius));
                    admissibility(&t, &reference, pattern)?.delta_max
                };
                if delta_max < delta {
                    bad += 1;
                }
            }
            Ok(bad)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(failures as f64 / n_samples as f64)
}
