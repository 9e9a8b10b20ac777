//! Discrete-time cocycles generated by a sequence of step matrices `A_n`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_overflow, Cocycle};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::time::TimeDomain;

/// Step matrices above this condition number are redrawn.
pub const MAX_STEP_CONDITION: f64 = 1e12;

pub type StepFn = Arc<dyn Fn(i64) -> Mat + Send + Sync>;

/// `Φ(t, n) = A_{n+t-1} ... A_n` for `t >= 0` and `Φ(-t, n) = Φ(t, n - t)^{-1}`,
/// over the shift `θ_t n = n + t`. States are integers stored as `f64`.
#[derive(Clone)]
pub struct StepCocycle {
    dim: usize,
    step: StepFn,
}

impl std::fmt::Debug for StepCocycle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StepCocycle").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl StepCocycle {
    pub fn new(dim: usize, step: StepFn) -> Self {
        Self { dim, step }
    }

    /// The step matrix `A_n`.
    pub fn step(&self, n: i64) -> Mat {
        (self.step)(n)
    }

    fn product(&self, start: i64, count: i64) -> Result<Mat> {
        let mut m = Mat::identity(self.dim, self.dim);
        for k in start..start + count {
            let a = self.step(k);
            if a.nrows() != self.dim || a.ncols() != self.dim {
                return Err(Error::DimensionMismatch { expected: self.dim, found: a.nrows() });
            }
            m = a * m;
            check_overflow(&m, (k - start + 1) as f64)?;
        }
        Ok(m)
    }
}

fn index_of(omega: f64) -> Result<i64> {
    TimeDomain::Discrete.check(omega).map_err(|_| Error::OrbitOutOfRange(omega))?;
    Ok(omega.round() as i64)
}

impl Cocycle for StepCocycle {
    type State = f64;

    fn dim(&self) -> usize {
        self.dim
    }

    fn time_domain(&self) -> TimeDomain {
        TimeDomain::Discrete
    }

    fn flow(&self, t: f64, omega: &f64) -> Result<f64> {
        TimeDomain::Discrete.check(t)?;
        Ok((index_of(*omega)? + t.round() as i64) as f64)
    }

    fn propagate(&self, t: f64, omega: &f64) -> Result<Mat> {
        TimeDomain::Discrete.check(t)?;
        let n = index_of(*omega)?;
        let k = t.round() as i64;
        if k >= 0 {
            return self.product(n, k);
        }
        let forward = self.product(n + k, -k)?;
        let condition = linalg::condition_number(&forward);
        if !(condition < 1e15) {
            return Err(Error::Singular { condition });
        }
        let inv = forward.try_inverse().ok_or(Error::Singular { condition })?;
        check_overflow(&inv, t)?;
        Ok(inv)
    }
}

/// Entry law for random step matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntryDistribution {
    /// Standard normal entries.
    Gaussian,
    /// Entries uniform on `[-1, 1]`.
    Uniform,
}

pub fn is_acceptable_step(m: &Mat) -> bool {
    linalg::condition_number(m) <= MAX_STEP_CONDITION
}

/// I.i.d. random matrix products. `A_n` is drawn from a ChaCha stream selected
/// by `n` under a fixed seed, so any step can be regenerated independently.
pub fn random_product_cocycle(dim: usize, seed: u64, dist: EntryDistribution) -> Result<StepCocycle> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let step = move |n: i64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        loop {
            let m = match dist {
                EntryDistribution::Gaussian => Mat::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal)),
                EntryDistribution::Uniform => Mat::from_fn(dim, dim, |_, _| rng.random_range(-1.0..=1.0)),
            };
            if is_acceptable_step(&m) {
                return m;
            }
        }
    };
    Ok(StepCocycle::new(dim, Arc::new(step)))
}
