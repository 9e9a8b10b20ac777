//! Ginelli's algorithm for covariant Lyapunov vectors.
//!
//! The forward phase propagates a tuple from `θ_{-t1} ω_0` to `θ_{t2} ω_0`,
//! re-orthonormalizing every `ortho_interval` and storing the R factors. The
//! backward phase applies the inverse R factors to a coefficient matrix `(α)`
//! expressed in the final frame, which is the same as propagating
//! `b' = A^{(f)} α` backward with the cocycle.

mod intersection;
mod study;

pub use intersection::intersection_variant;
pub use study::{convergence_study, CellResult, InitMode, StudyConfig, StudyResult, DEFAULT_FLOOR};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cocycle::{Cocycle, LyapunovSpectrum};
use crate::error::{Error, Result};
use crate::index::TimeSeries;
use crate::linalg::{self, Mat};
use crate::pattern::DegeneracyPattern;
use crate::subspace::{distance, Subspace, VectorTuple};
use crate::time::TimeDomain;

/// A QR step collapses when an R diagonal falls below this fraction of the frame norm.
pub const COLLAPSE_THRESHOLD: f64 = 1e-12;

/// Largest diagonal ratio of an R factor accepted by the backward solve.
pub const MAX_TRIANGULAR_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, PartialEq)]
pub struct GinelliConfig {
    /// Warm-up time before `ω_0`.
    pub t1: f64,
    /// Time after `ω_0` used by the backward phase.
    pub t2: f64,
    /// Time between QR steps; must divide `t1` and `t2`.
    pub ortho_interval: f64,
    pub pattern: DegeneracyPattern,
    pub seed: u64,
    /// Extra output times `m` in `[-t1, t2]`, multiples of `ortho_interval`.
    pub interval: Vec<f64>,
    /// Rate tolerance for grouping LEs; defaults to `10 / t2`.
    pub grouping_tol: Option<f64>,
    /// Record distance-to-reference series when the cocycle has closed-form Oseledets data.
    pub diagnostics: bool,
}

impl GinelliConfig {
    pub fn new(t1: f64, t2: f64, ortho_interval: f64, pattern: DegeneracyPattern) -> Self {
        Self { t1, t2, ortho_interval, pattern, seed: 0, interval: Vec::new(), grouping_tol: None, diagnostics: true }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_interval(mut self, interval: Vec<f64>) -> Self {
        self.interval = interval;
        self
    }

    /// Checks the configuration against a time domain and returns the number
    /// of QR steps before and after `ω_0`.
    pub fn steps(&self, domain: TimeDomain) -> Result<(usize, usize)> {
        let tau = self.ortho_interval;
        if !(self.t1 > 0.0 && self.t2 > 0.0 && self.t1.is_finite() && self.t2.is_finite()) {
            return Err(Error::InvalidArgument(format!("t1 and t2 must be positive, got {} and {}", self.t1, self.t2)));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!("ortho_interval must be positive, got {tau}")));
        }
        domain.check(tau)?;
        if TimeDomain::steps_in(tau, domain.base_step()).is_none() {
            return Err(Error::InvalidArgument(format!(
                "ortho_interval {tau} is not a multiple of the base step {}",
                domain.base_step()
            )));
        }
        match (TimeDomain::steps_in(self.t1, tau), TimeDomain::steps_in(self.t2, tau)) {
            (Some(n1), Some(n2)) if n1 > 0 && n2 > 0 => Ok((n1, n2)),
            _ => Err(Error::InvalidArgument(format!(
                "ortho_interval {tau} must divide t1 = {} and t2 = {}",
                self.t1, self.t2
            ))),
        }
    }

    fn step_index(&self, origin: usize, total: usize, m: f64) -> Result<usize> {
        let bad = || Error::InvalidArgument(format!("output time {m} is not a QR step inside [-t1, t2]"));
        let offset = (m / self.ortho_interval).round();
        if (offset * self.ortho_interval - m).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(bad());
        }
        let k = origin as f64 + offset;
        if k < 0.0 || k > total as f64 {
            return Err(bad());
        }
        Ok(k as usize)
    }
}

/// Data of the forward phase (Benettin steps).
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRecord<S> {
    /// Frame `Q_k` at `states[k]`, `k = 0..=N`.
    pub q_frames: Vec<Mat>,
    /// `R_0` from the initial QR of the tuple, then `R_k` with `Φ Q_{k-1} = Q_k R_k`.
    pub r_factors: Vec<Mat>,
    /// Cumulative sums of `log diag(R_k)` over steps `1..=k`.
    pub log_r_diag_sums: Vec<Vec<f64>>,
    pub states: Vec<S>,
    /// Index of `ω_0` in the step sequence.
    pub origin_index: usize,
    pub ortho_interval: f64,
}

impl<S> ForwardRecord<S> {
    pub fn steps(&self) -> usize {
        self.q_frames.len() - 1
    }

    /// `A^{(f)}`: the final frame, the Gram-Schmidt basis of the evolved tuple.
    pub fn final_frame(&self) -> &Mat {
        &self.q_frames[self.steps()]
    }

    pub fn frame_at_origin(&self) -> &Mat {
        &self.q_frames[self.origin_index]
    }

    /// Time of step `k` relative to `ω_0`.
    pub fn time_of(&self, k: usize) -> f64 {
        (k as f64 - self.origin_index as f64) * self.ortho_interval
    }
}

/// Forward phase from `θ_{-t1} ω_0` to `θ_{t2} ω_0`.
pub fn forward_phase<C: Cocycle + ?Sized>(
    c: &C,
    omega0: &C::State,
    cfg: &GinelliConfig,
    init: &VectorTuple,
) -> Result<ForwardRecord<C::State>> {
    let d = c.dim();
    let (n1, n2) = cfg.steps(c.time_domain())?;
    cfg.pattern.check_total(d)?;
    if init.ambient_dim() != d || init.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: init.len() });
    }
    linalg::check_finite(init.vectors())?;
    if !linalg::has_full_column_rank(init.vectors(), crate::subspace::RANK_TOLERANCE) {
        return Err(Error::Degenerate { group: 0 });
    }
    let tau = cfg.ortho_interval;
    let total = n1 + n2;
    let mut states = Vec::with_capacity(total + 1);
    for k in 0..=total {
        states.push(c.flow(k as f64 * tau - cfg.t1, omega0)?);
    }
    let (q0, r0) = linalg::qr_positive(init.vectors());
    let mut q_frames = Vec::with_capacity(total + 1);
    let mut r_factors = Vec::with_capacity(total + 1);
    let mut log_r_diag_sums = Vec::with_capacity(total + 1);
    q_frames.push(q0);
    r_factors.push(r0);
    log_r_diag_sums.push(vec![0.0; d]);
    for k in 1..=total {
        let m = c.propagate(tau, &states[k - 1])? * &q_frames[k - 1];
        linalg::check_finite(&m).map_err(|_| Error::Overflow { time: k as f64 * tau })?;
        let (q, r) = linalg::qr_positive(&m);
        let scale = m.norm();
        if (0..d).any(|j| !(r[(j, j)] > COLLAPSE_THRESHOLD * scale)) {
            return Err(Error::Collapse { step: k });
        }
        let mut sums = log_r_diag_sums[k - 1].clone();
        for (j, s) in sums.iter_mut().enumerate() {
            *s += r[(j, j)].ln();
        }
        q_frames.push(q);
        r_factors.push(r);
        log_r_diag_sums.push(sums);
    }
    Ok(ForwardRecord { q_frames, r_factors, log_r_diag_sums, states, origin_index: n1, ortho_interval: tau })
}

/// Output of the backward phase.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardOutput {
    /// `U_i` approximating `E_i(ω_0)`.
    pub at_origin: Vec<Subspace>,
    /// Unit vectors `Q_k C_k` at `ω_0`, grouped by the pattern.
    pub vectors_at_origin: Mat,
    /// Unit vectors at every step `k = 0..=N`.
    pub vectors: Vec<Mat>,
}

fn check_alpha(alpha: &Mat, pattern: &DegeneracyPattern) -> Result<()> {
    let d = pattern.total();
    if alpha.nrows() != d || alpha.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: alpha.ncols() });
    }
    linalg::check_finite(alpha)?;
    let scale = alpha.amax();
    for (i, &upto) in pattern.cumulative().iter().enumerate() {
        for j in pattern.block_range(i) {
            if alpha.column(j).rows(upto, d - upto).amax() > 1e-14 * scale {
                return Err(Error::InvalidArgument(format!(
                    "coefficient block {i} must vanish below row {upto}"
                )));
            }
        }
    }
    if !linalg::has_full_column_rank(alpha, crate::subspace::RANK_TOLERANCE) {
        return Err(Error::Degenerate { group: 0 });
    }
    Ok(())
}

fn normalize_columns(m: &mut Mat) {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
}

fn block_spaces(vectors: &Mat, pattern: &DegeneracyPattern) -> Result<Vec<Subspace>> {
    (0..pattern.len())
        .map(|i| {
            let r = pattern.block_range(i);
            Subspace::span(&vectors.columns(r.start, r.len()).into_owned()).map_err(|_| Error::Degenerate { group: i })
        })
        .collect()
}

/// Backward phase: `C_{k-1} = R_k^{-1} C_k` with column normalization, from
/// `C_N = α` down to `ω_0` and on to the start of the record.
pub fn backward_phase<S>(rec: &ForwardRecord<S>, alpha: &Mat, cfg: &GinelliConfig) -> Result<BackwardOutput> {
    check_alpha(alpha, &cfg.pattern)?;
    let total = rec.steps();
    let mut coeffs = alpha.clone();
    normalize_columns(&mut coeffs);
    let mut vectors = vec![Mat::zeros(0, 0); total + 1];
    vectors[total] = &rec.q_frames[total] * &coeffs;
    for k in (1..=total).rev() {
        let r = &rec.r_factors[k];
        let diag = r.diagonal();
        let condition = diag.max() / diag.min();
        if !(condition <= MAX_TRIANGULAR_CONDITION) {
            return Err(Error::Stability { step: k, condition });
        }
        coeffs = r.solve_upper_triangular(&coeffs).ok_or(Error::Stability { step: k, condition })?;
        normalize_columns(&mut coeffs);
        let mut v = &rec.q_frames[k - 1] * &coeffs;
        normalize_columns(&mut v);
        vectors[k - 1] = v;
    }
    let vectors_at_origin = vectors[rec.origin_index].clone();
    let at_origin = block_spaces(&vectors_at_origin, &cfg.pattern)?;
    Ok(BackwardOutput { at_origin, vectors_at_origin, vectors })
}

/// Lyapunov exponents from the stored R diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct LeEstimate {
    /// Per-column Benettin rates over the window `[ω_0, θ_{t2} ω_0]`.
    pub column_rates: Vec<f64>,
    /// Rates grouped into blocks of nearly equal values.
    pub spectrum: LyapunovSpectrum,
    pub window: f64,
}

/// Per-column rates `(1/t2) Σ log diag(R_k)` over the steps after `ω_0`,
/// grouped when adjacent rates differ by less than `grouping_tol`
/// (default `10 / t2`).
pub fn les_from_forward<S>(rec: &ForwardRecord<S>, grouping_tol: Option<f64>) -> Result<LeEstimate> {
    let total = rec.steps();
    if total == 0 {
        return Err(Error::InvalidArgument("forward record has no steps".into()));
    }
    let start = if rec.origin_index < total { rec.origin_index } else { 0 };
    let window = (total - start) as f64 * rec.ortho_interval;
    let column_rates: Vec<f64> = rec.log_r_diag_sums[total]
        .iter()
        .zip(&rec.log_r_diag_sums[start])
        .map(|(a, b)| (a - b) / window)
        .collect();
    let tol = grouping_tol.unwrap_or(10.0 / window);

    // (sum, count) per group.
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for (j, &rate) in column_rates.iter().enumerate() {
        if j > 0 && (column_rates[j - 1] - rate) < tol {
            let g = groups.last_mut().expect("group exists");
            g.0 += rate;
            g.1 += 1;
        } else {
            groups.push((rate, 1));
        }
    }
    let mut merged = true;
    while merged {
        merged = false;
        for i in 1..groups.len() {
            let (a, b) = (groups[i - 1], groups[i]);
            if a.0 / a.1 as f64 <= b.0 / b.1 as f64 {
                groups[i - 1] = (a.0 + b.0, a.1 + b.1);
                groups.remove(i);
                merged = true;
                break;
            }
        }
    }
    let pattern = DegeneracyPattern::new(groups.iter().map(|g| g.1).collect())?;
    let spectrum = LyapunovSpectrum::new(groups.iter().map(|g| g.0 / g.1 as f64).collect(), pattern)?;
    Ok(LeEstimate { column_rates, spectrum, window })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinelliResult {
    pub subspaces_at_origin: Vec<Subspace>,
    /// `(m, blocks)` approximating `E_i(θ_m ω_0)` for each requested time.
    pub subspaces_on_interval: Vec<(f64, Vec<Subspace>)>,
    /// Unit CLV candidates at `ω_0`, grouped by the pattern.
    pub vectors_at_origin: Mat,
    pub les: LeEstimate,
    /// Per block, the distance to the closed-form `E_i` along the record,
    /// indexed by time relative to `ω_0`. Empty without a closed form.
    pub diagnostics: Vec<TimeSeries>,
    pub init: VectorTuple,
    pub alpha: Mat,
}

/// Random initial tuple (uniform in the unit ball per vector) and
/// block-structured coefficients `(α)`: block `i` draws uniformly from the
/// unit ball of `R^{d_1 + ... + d_i}`, zero-padded.
pub fn random_tuples<R: Rng + ?Sized>(rng: &mut R, pattern: &DegeneracyPattern) -> (VectorTuple, Mat) {
    let d = pattern.total();
    let init = VectorTuple::new(linalg::uniform_ball_tuple(rng, d, d, 1.0));
    let mut alpha = Mat::zeros(d, d);
    for (i, &upto) in pattern.cumulative().iter().enumerate() {
        for j in pattern.block_range(i) {
            let v = linalg::uniform_in_ball(rng, upto, 1.0);
            alpha.view_mut((0, j), (upto, 1)).copy_from(&v);
        }
    }
    (init, alpha)
}

/// The full algorithm with `(b)` and `(α)` drawn from `cfg.seed`.
pub fn run_ginelli<C: Cocycle + ?Sized>(c: &C, omega0: &C::State, cfg: &GinelliConfig) -> Result<GinelliResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (init, alpha) = random_tuples(&mut rng, &cfg.pattern);
    run_ginelli_with(c, omega0, cfg, &init, &alpha)
}

/// The full algorithm with caller-supplied `(b)` and `(α)`.
pub fn run_ginelli_with<C: Cocycle + ?Sized>(
    c: &C,
    omega0: &C::State,
    cfg: &GinelliConfig,
    init: &VectorTuple,
    alpha: &Mat,
) -> Result<GinelliResult> {
    let rec = forward_phase(c, omega0, cfg, init)?;
    let back = backward_phase(&rec, alpha, cfg)?;
    let les = les_from_forward(&rec, cfg.grouping_tol)?;
    let total = rec.steps();
    let subspaces_on_interval = cfg
        .interval
        .iter()
        .map(|&m| {
            let k = cfg.step_index(rec.origin_index, total, m)?;
            Ok((m, block_spaces(&back.vectors[k], &cfg.pattern)?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut diagnostics = Vec::new();
    if cfg.diagnostics && c.oseledets(omega0).is_ok() {
        let p = cfg.pattern.len();
        let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::with_capacity(total + 1); p];
        for k in 0..=total {
            let reference = c.oseledets(&rec.states[k])?;
            if reference.spaces.len() != p {
                break;
            }
            let blocks = block_spaces(&back.vectors[k], &cfg.pattern)?;
            for i in 0..p {
                series[i].push((rec.time_of(k), distance(&blocks[i], &reference.spaces[i])?));
            }
        }
        diagnostics = series
            .into_iter()
            .filter(|s| s.len() == total + 1)
            .map(|s| TimeSeries::new(c.time_domain(), s))
            .collect::<Result<Vec<_>>>()?;
    }

    Ok(GinelliResult {
        subspaces_at_origin: back.at_origin,
        subspaces_on_interval,
        vectors_at_origin: back.vectors_at_origin,
        les,
        diagnostics,
        init: init.clone(),
        alpha: alpha.clone(),
    })
}

/// Distance between `span(column)` of the output vectors at `ω_0` and `reference`,
/// for runs with `t1 = t2 = T` over the given runtimes and a fixed seed.
pub fn column_distance_series<C: Cocycle + ?Sized>(
    c: &C,
    omega0: &C::State,
    template: &GinelliConfig,
    runtimes: &[f64],
    column: usize,
    reference: &Subspace,
) -> Result<TimeSeries> {
    let mut samples = Vec::with_capacity(runtimes.len());
    for &t in runtimes {
        let cfg = GinelliConfig { t1: t, t2: t, interval: Vec::new(), diagnostics: false, ..template.clone() };
        let res = run_ginelli(c, omega0, &cfg)?;
        let v = res.vectors_at_origin.column(column).into_owned();
        samples.push((t, distance(&Subspace::from_vector(&v)?, reference)?));
    }
    TimeSeries::new(c.time_domain(), samples)
}
