//! Convergence studies over a grid of runtimes `(t1, t2)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{random_tuples, run_ginelli_with, GinelliConfig};
use crate::cocycle::{Cocycle, OseledetsData};
use crate::error::{Error, Result};
use crate::index::{extended_index_estimate, RateEstimate};
use crate::linalg::Mat;
use crate::subspace::{distance, VectorTuple};

/// Distances at or below this count as converged: the rate bound then lies
/// below what double precision can resolve.
pub const DEFAULT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum InitMode {
    /// Trial `j` draws `(b)` and `(α)` from a stream keyed by `(seed, j)`.
    Random,
    /// Every trial uses the same tuples.
    Fixed { init: VectorTuple, alpha: Mat },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub grid: Vec<(f64, f64)>,
    pub trials: usize,
    pub seed: u64,
    pub ortho_interval: f64,
    /// Slack on the rate bound; defaults to `0.1 * min gap`.
    pub epsilon: Option<f64>,
    pub init: InitMode,
    pub floor: f64,
}

impl StudyConfig {
    pub fn new(grid: Vec<(f64, f64)>, trials: usize, seed: u64, ortho_interval: f64) -> Self {
        Self { grid, trials, seed, ortho_interval, epsilon: None, init: InitMode::Random, floor: DEFAULT_FLOOR }
    }

    /// The diagonal grid `t1 = t2 = t`.
    pub fn diagonal(times: &[f64], trials: usize, seed: u64, ortho_interval: f64) -> Self {
        Self::new(times.iter().map(|&t| (t, t)).collect(), trials, seed, ortho_interval)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub t1: f64,
    pub t2: f64,
    /// `distances[trial][block]`.
    pub distances: Vec<Vec<f64>>,
    /// Largest distance over trials, per block.
    pub sup_distance: Vec<f64>,
    /// Fraction of trials where every block lies below `e^{(-gap + ε) m}`,
    /// `m = min(t1, t2)`, or below the floor. Tends to 1 as `m` grows.
    pub success_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub cells: Vec<CellResult>,
    /// Per block, the extended index of the sup-over-trials distance. Empty
    /// when the grid has fewer than three distinct values of `min(t1, t2)`.
    pub rates: Vec<RateEstimate>,
    /// `-min(adjacent gaps)` per block.
    pub expected_rates: Vec<f64>,
    /// Per trial and block, the extended index of that trial's own distances
    /// over the grid (points at the floor left out). `None` when the grid has
    /// fewer than three distinct values of `min(t1, t2)` or every point of the
    /// trial sits at the floor.
    pub trial_rates: Vec<Vec<Option<f64>>>,
    /// Fraction of trials whose fitted rates all satisfy `rate <= -gap + ε`;
    /// trials converged to the floor count as successes.
    pub trial_success_fraction: Option<f64>,
    pub epsilon: f64,
}

/// Runs Ginelli's algorithm on every `(cell, trial)` pair and compares the
/// blocks at `ω_0` with the reference splitting.
///
/// Trial tuples depend on the trial index only, so each trial follows a single
/// `(b, α)` across the grid. Work is spread over the rayon pool and collected in
/// grid order, so results do not depend on the thread count.
pub fn convergence_study<C: Cocycle + ?Sized>(
    c: &C,
    omega0: &C::State,
    reference: &OseledetsData,
    cfg: &StudyConfig,
) -> Result<StudyResult> {
    if cfg.grid.is_empty() || cfg.trials == 0 {
        return Err(Error::InvalidArgument("study needs a nonempty grid and at least one trial".into()));
    }
    let pattern = reference.spectrum.pattern().clone();
    pattern.check_total(c.dim())?;
    let gaps = reference.spectrum.gaps();
    let finite_gaps: Vec<f64> = gaps.iter().copied().filter(|g| g.is_finite()).collect();
    let min_gap = finite_gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let epsilon = cfg.epsilon.unwrap_or(if min_gap.is_finite() { 0.1 * min_gap } else { 0.0 });
    let p = pattern.len();

    let jobs: Vec<(usize, usize)> =
        (0..cfg.grid.len()).flat_map(|cell| (0..cfg.trials).map(move |trial| (cell, trial))).collect();
    let distances: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(cell, trial)| {
            let (t1, t2) = cfg.grid[cell];
            let mut run = GinelliConfig::new(t1, t2, cfg.ortho_interval, pattern.clone());
            run.diagnostics = false;
            let (init, alpha) = match &cfg.init {
                InitMode::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(trial as u64);
                    random_tuples(&mut rng, &pattern)
                }
                InitMode::Fixed { init, alpha } => (init.clone(), alpha.clone()),
            };
            let res = run_ginelli_with(c, omega0, &run, &init, &alpha)?;
            res.subspaces_at_origin.iter().zip(&reference.spaces).map(|(u, e)| distance(u, e)).collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(cfg.grid.len());
    for (cell, chunk) in distances.chunks(cfg.trials).enumerate() {
        let (t1, t2) = cfg.grid[cell];
        let m = t1.min(t2);
        let meets = |ds: &Vec<f64>| {
            ds.iter().zip(&gaps).all(|(&dist, &gap)| dist <= cfg.floor || dist.ln() / m <= -gap + epsilon)
        };
        let successes = chunk.iter().filter(|ds| meets(ds)).count();
        let sup_distance = (0..p).map(|i| chunk.iter().map(|ds| ds[i]).fold(0.0, f64::max)).collect();
        cells.push(CellResult {
            t1,
            t2,
            distances: chunk.to_vec(),
            sup_distance,
            success_fraction: successes as f64 / cfg.trials as f64,
        });
    }

    if cells.iter().all(|cell| cell.sup_distance.iter().all(|&x| x <= cfg.floor)) {
        return Err(Error::Saturation);
    }

    let mut mins: Vec<f64> = cfg.grid.iter().map(|&(a, b)| a.min(b)).collect();
    mins.sort_by(f64::total_cmp);
    mins.dedup();
    let mut rates = Vec::new();
    if mins.len() >= 3 {
        for i in 0..p {
            let grid: Vec<(f64, f64, f64)> = cells.iter().map(|cell| (cell.t1, cell.t2, cell.sup_distance[i])).collect();
            let mut rate = extended_index_estimate(&grid, mins[0])?;
            let floored = cells.iter().filter(|cell| cell.sup_distance[i] <= cfg.floor).count();
            rate.saturated |= 2 * floored > cells.len();
            rates.push(rate);
        }
    }

    let mut trial_rates = Vec::new();
    let mut trial_success_fraction = None;
    if mins.len() >= 3 {
        for trial in 0..cfg.trials {
            let per_block = (0..p)
                .map(|i| {
                    let points: Vec<(f64, f64, f64)> = cells
                        .iter()
                        .map(|cell| (cell.t1, cell.t2, cell.distances[trial][i]))
                        .filter(|&(_, _, v)| v > cfg.floor)
                        .collect();
                    match extended_index_estimate(&points, mins[0]) {
                        Ok(r) => Ok(Some(r.rate)),
                        Err(Error::Coverage(_) | Error::Saturation) => Ok(None),
                        Err(e) => Err(e),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            trial_rates.push(per_block);
        }
        let successes = trial_rates
            .iter()
            .filter(|rates| rates.iter().zip(&gaps).all(|(r, &gap)| r.is_none_or(|r| r <= -gap + epsilon)))
            .count();
        trial_success_fraction = Some(successes as f64 / cfg.trials as f64);
    }

    Ok(StudyResult {
        cells,
        rates,
        expected_rates: gaps.iter().map(|g| -g).collect(),
        epsilon,
        trial_rates,
        trial_success_fraction,
    })
}
