//! Two-sided linear cocycles `Φ(t, ω)` over a flow `θ_t`, with analytic
//! builtins, an ODE tangent cocycle and SVD-based utilities.

mod builtin;
mod lorenz;
mod reversed;
mod step;

pub use builtin::{
    degenerate_rotating_cocycle, diagonal_cocycle, rotating_cocycle, rotation, DegenerateRotatingCocycle,
    DiagonalCocycle, RotatingCocycle,
};
pub use lorenz::{lorenz63, Lorenz63, Lorenz63Params};
pub use reversed::Reversed;
pub use step::{is_acceptable_step, random_product_cocycle, EntryDistribution, StepCocycle, StepFn, MAX_STEP_CONDITION};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::pattern::DegeneracyPattern;
use crate::subspace::Subspace;
use crate::time::TimeDomain;

/// Entries above this magnitude are reported as overflow.
pub const OVERFLOW_LIMIT: f64 = 1e300;

/// A linear cocycle: `Φ(0, ω) = I` and `Φ(s + t, ω) = Φ(s, θ_t ω) Φ(t, ω)`.
pub trait Cocycle: Send + Sync {
    type State: Clone + std::fmt::Debug + Send + Sync;

    fn dim(&self) -> usize;

    fn time_domain(&self) -> TimeDomain;

    /// The base flow `θ_t ω`.
    fn flow(&self, t: f64, omega: &Self::State) -> Result<Self::State>;

    /// The propagator `Φ(t, ω)`.
    fn propagate(&self, t: f64, omega: &Self::State) -> Result<Mat>;

    /// Closed-form Oseledets data at `omega`, for cocycles that have it.
    fn oseledets(&self, _omega: &Self::State) -> Result<OseledetsData> {
        Err(Error::Unsupported("cocycle has no closed-form Oseledets splitting".into()))
    }
}

macro_rules! forward_cocycle {
    ($($ptr:ty),*) => {$(
        impl<C: Cocycle + ?Sized> Cocycle for $ptr {
            type State = C::State;
            fn dim(&self) -> usize { (**self).dim() }
            fn time_domain(&self) -> TimeDomain { (**self).time_domain() }
            fn flow(&self, t: f64, omega: &Self::State) -> Result<Self::State> { (**self).flow(t, omega) }
            fn propagate(&self, t: f64, omega: &Self::State) -> Result<Mat> { (**self).propagate(t, omega) }
            fn oseledets(&self, omega: &Self::State) -> Result<OseledetsData> { (**self).oseledets(omega) }
        }
    )*};
}

forward_cocycle!(&C, Box<C>, Arc<C>);

/// Closed-form Oseledets data; fails for cocycles without an analytic splitting.
pub fn analytic_oseledets<C: Cocycle + ?Sized>(c: &C, omega: &C::State) -> Result<OseledetsData> {
    c.oseledets(omega)
}

pub(crate) fn check_overflow(m: &Mat, time: f64) -> Result<()> {
    if m.iter().all(|x| x.is_finite() && x.abs() <= OVERFLOW_LIMIT) {
        Ok(())
    } else {
        Err(Error::Overflow { time })
    }
}

/// Distinct Lyapunov exponents `λ_1 > ... > λ_p` with multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovSpectrum {
    exponents: Vec<f64>,
    pattern: DegeneracyPattern,
}

impl LyapunovSpectrum {
    pub fn new(exponents: Vec<f64>, pattern: DegeneracyPattern) -> Result<Self> {
        if exponents.len() != pattern.len() {
            return Err(Error::DimensionMismatch { expected: pattern.len(), found: exponents.len() });
        }
        if exponents.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        if exponents.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidArgument("exponents must be strictly decreasing".into()));
        }
        Ok(Self { exponents, pattern })
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn pattern(&self) -> &DegeneracyPattern {
        &self.pattern
    }

    pub fn dim(&self) -> usize {
        self.pattern.total()
    }

    /// Each exponent repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.exponents
            .iter()
            .zip(self.pattern.sizes())
            .flat_map(|(&l, &n)| std::iter::repeat(l).take(n))
            .collect()
    }

    /// `min(λ_{i-1} - λ_i, λ_i - λ_{i+1})` per block, with infinite sentinels.
    pub fn gaps(&self) -> Vec<f64> {
        let p = self.exponents.len();
        (0..p)
            .map(|i| {
                let up = if i > 0 { self.exponents[i - 1] - self.exponents[i] } else { f64::INFINITY };
                let down = if i + 1 < p { self.exponents[i] - self.exponents[i + 1] } else { f64::INFINITY };
                up.min(down)
            })
            .collect()
    }

    /// Spectrum of the time-reversed cocycle: `λ_i^- = -λ_{p+1-i}`.
    pub fn reversed(&self) -> Self {
        Self { exponents: self.exponents.iter().rev().map(|l| -l).collect(), pattern: self.pattern.reversed() }
    }
}

/// Oseledets splitting at one base point together with the two filtrations.
#[derive(Debug, Clone)]
pub struct OseledetsData {
    pub spectrum: LyapunovSpectrum,
    /// `E_1, ..., E_p`.
    pub spaces: Vec<Subspace>,
    /// `V_i = E_i ⊕ ... ⊕ E_p`: growth rate at most `λ_i` forward in time.
    pub forward_filtration: Vec<Subspace>,
    /// `V_j^- = E_1 ⊕ ... ⊕ E_{p+1-j}`: growth at most `λ_j^-` backward in time.
    pub backward_filtration: Vec<Subspace>,
}

impl OseledetsData {
    pub fn new(spectrum: LyapunovSpectrum, spaces: Vec<Subspace>) -> Result<Self> {
        let p = spectrum.pattern().len();
        if spaces.len() != p {
            return Err(Error::DimensionMismatch { expected: p, found: spaces.len() });
        }
        for (i, (s, &n)) in spaces.iter().zip(spectrum.pattern().sizes()).enumerate() {
            if s.dim() != n || s.ambient_dim() != spectrum.dim() {
                return Err(Error::Degenerate { group: i });
            }
        }
        let direct_sum = |range: std::ops::Range<usize>| -> Result<Subspace> {
            let mut acc = Subspace::zero(spectrum.dim());
            for k in range {
                acc = acc.sum(&spaces[k])?;
            }
            Ok(acc)
        };
        let forward_filtration = (0..p).map(|i| direct_sum(i..p)).collect::<Result<Vec<_>>>()?;
        let backward_filtration = (0..p).map(|j| direct_sum(0..p - j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { spectrum, spaces, forward_filtration, backward_filtration })
    }

    /// Data for the time-reversed cocycle at the same base point.
    pub fn reversed(&self) -> Self {
        Self {
            spectrum: self.spectrum.reversed(),
            spaces: self.spaces.iter().rev().cloned().collect(),
            forward_filtration: self.backward_filtration.clone(),
            backward_filtration: self.forward_filtration.clone(),
        }
    }
}

/// SVD `A = U Σ V^T` with non-increasing singular values grouped by a pattern.
#[derive(Debug, Clone)]
pub struct SVDResult {
    pub left: Mat,
    pub singular: Vec<f64>,
    pub right: Mat,
    pub pattern: DegeneracyPattern,
}

impl SVDResult {
    /// Largest singular value of block `i`.
    pub fn sigma_max(&self, i: usize) -> f64 {
        self.singular[self.pattern.block_range(i).start]
    }

    /// Smallest singular value of block `i`.
    pub fn sigma_min(&self, i: usize) -> f64 {
        self.singular[self.pattern.block_range(i).end - 1]
    }

    /// Decomposition of `A^{-1}` in the same ordering convention:
    /// `σ̂ = (1/σ)` reversed, `û = v` reversed, `v̂ = u` reversed.
    pub fn inverse(&self) -> Self {
        let d = self.singular.len();
        let rev = |m: &Mat| Mat::from_fn(m.nrows(), d, |r, c| m[(r, d - 1 - c)]);
        Self {
            left: rev(&self.right),
            singular: self.singular.iter().rev().map(|s| 1.0 / s).collect(),
            right: rev(&self.left),
            pattern: self.pattern.reversed(),
        }
    }

    pub fn reconstruct(&self) -> Mat {
        let s = Mat::from_diagonal(&linalg::Vector::from_vec(self.singular.clone()));
        &self.left * s * self.right.transpose()
    }
}

/// SVD of an invertible matrix with singular values sorted non-increasingly.
///
/// Ties keep the order produced by the decomposition routine; only group spans
/// are meaningful inside a degenerate block.
pub fn svd_ordered(a: &Mat, pattern: &DegeneracyPattern) -> Result<SVDResult> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: a.ncols() });
    }
    pattern.check_total(d)?;
    linalg::check_finite(a)?;
    let svd = a.clone().svd(true, true);
    let u = svd.u.ok_or(Error::NonFinite)?;
    let vt = svd.v_t.ok_or(Error::NonFinite)?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    if !(singular[d - 1] > 1e-15 * singular[0]) {
        let condition = if singular[d - 1] > 0.0 { singular[0] / singular[d - 1] } else { f64::INFINITY };
        return Err(Error::Singular { condition });
    }
    let left = Mat::from_fn(d, d, |r, c| u[(r, order[c])]);
    let right = Mat::from_fn(d, d, |r, c| vt[(order[c], r)]);
    Ok(SVDResult { left, singular, right, pattern: pattern.clone() })
}

/// `‖∧^i A‖`: the product of the `i` largest singular values.
pub fn wedge_norm(a: &Mat, i: usize) -> Result<f64> {
    let k = a.nrows().min(a.ncols());
    if i == 0 || i > k {
        return Err(Error::InvalidArgument(format!("order {i} outside 1..={k}")));
    }
    linalg::check_finite(a)?;
    Ok(linalg::singular_values(a)[..i].iter().product())
}

/// QR-reduces `frame` through the chunk propagators, returning the final frame
/// and the summed log-diagonals of the R factors.
fn sweep(chunks: impl Iterator<Item = Mat>, mut frame: Mat) -> (Mat, Vec<f64>) {
    let mut logs = vec![0.0; frame.ncols()];
    for m in chunks {
        let (q, r) = linalg::qr_positive(&(m * &frame));
        for (j, l) in logs.iter_mut().enumerate() {
            *l += r[(j, j)].ln();
        }
        frame = q;
    }
    (frame, logs)
}

/// Finite-time Lyapunov exponents `(1/t) log σ_j(Φ(t, ω))`, non-increasing.
///
/// The propagator is split into chunks of about one time unit and never
/// formed explicitly. A forward QR sweep followed by a transposed backward
/// sweep aligns the starting frame with the right singular vectors of
/// `Φ(t, ω)`; a second forward sweep then reads the log singular values off
/// the R diagonals.
pub fn finite_time_les<C: Cocycle + ?Sized>(c: &C, omega: &C::State, t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    let domain = c.time_domain();
    domain.check(t)?;
    let chunk = match domain {
        TimeDomain::Discrete => 1.0,
        TimeDomain::Continuous { base_step } => base_step * (1.0 / base_step).round().max(1.0),
    };
    let mut chunks = Vec::new();
    let mut state = omega.clone();
    let mut elapsed = 0.0;
    while t - elapsed > 1e-9 * t.max(1.0) {
        let h = chunk.min(t - elapsed);
        let m = c.propagate(h, &state)?;
        linalg::check_finite(&m).map_err(|_| Error::Overflow { time: elapsed + h })?;
        chunks.push(m);
        state = c.flow(h, &state)?;
        elapsed += h;
    }
    let d = c.dim();
    let (left, _) = sweep(chunks.iter().cloned(), Mat::identity(d, d));
    let (right, _) = sweep(chunks.iter().rev().map(|m| m.transpose()), left);
    let (_, logs) = sweep(chunks.into_iter(), right);
    let mut les: Vec<f64> = logs.into_iter().map(|l| l / t).collect();
    if les.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow { time: t });
    }
    les.sort_by(|a, b| b.total_cmp(a));
    Ok(les)
}
