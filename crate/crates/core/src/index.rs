//! Empirical Lyapunov indices: exponential growth rates of sampled positive
//! functions of one or two time parameters.
//!
//! The limsup in the definition is approximated by a least-squares slope of
//! `log f` over the tail of the samples. Values below [`UNDERFLOW_FLOOR`] are
//! flagged and left out of every fit.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::time::TimeDomain;

/// Values below this are treated as having underflowed.
pub const UNDERFLOW_FLOOR: f64 = 1e-290;

pub const DEFAULT_TAIL_FRACTION: f64 = 0.5;

/// Samples `(t, f(t))` with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    domain: TimeDomain,
    times: Vec<f64>,
    values: Vec<f64>,
    underflow: Vec<bool>,
}

impl TimeSeries {
    pub fn new(domain: TimeDomain, samples: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut underflow = Vec::new();
        for (t, v) in samples {
            if !t.is_finite() || !(v >= 0.0) || v.is_infinite() {
                return Err(Error::NonFinite);
            }
            if let Some(&last) = times.last() {
                if t <= last {
                    return Err(Error::InvalidArgument(format!("times must increase strictly ({last} then {t})")));
                }
            }
            let low = v < UNDERFLOW_FLOOR;
            times.push(t);
            values.push(if low { f64::MIN_POSITIVE } else { v });
            underflow.push(low);
        }
        Ok(Self { domain, times, values, underflow })
    }

    /// Samples `f` at the given times.
    pub fn from_fn(domain: TimeDomain, times: impl IntoIterator<Item = f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(domain, times.into_iter().map(|t| (t, f(t))))
    }

    pub fn domain(&self) -> TimeDomain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn underflow(&self) -> &[bool] {
        &self.underflow
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

/// A fitted exponential rate.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub window: (f64, f64),
    /// RMS of the log-residuals of the fit.
    pub residual: f64,
    pub saturated: bool,
    /// For two-parameter fits, the rate of `f(2t, t)` when the grid has such
    /// points. It should not exceed `rate` by more than noise.
    pub restriction_rate: Option<f64>,
}

/// Least-squares line through `(x, y)`; returns `(slope, rms residual)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (ss / n).sqrt())
}

/// Lyapunov index of a one-parameter series: the slope of `log f` over the
/// last `tail_fraction` of the samples.
pub fn lyapunov_index_estimate(series: &TimeSeries, tail_fraction: f64) -> Result<RateEstimate> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!("tail_fraction must lie in (0, 1], got {tail_fraction}")));
    }
    let n = series.len();
    let tail = ((n as f64) * tail_fraction).ceil() as usize;
    if tail < 4 {
        return Err(Error::Coverage(format!("need at least 4 samples in the tail, have {tail}")));
    }
    let start = n - tail;
    let mut x = Vec::with_capacity(tail);
    let mut y = Vec::with_capacity(tail);
    for k in start..n {
        if !series.underflow[k] {
            x.push(series.times[k]);
            y.push(series.values[k].ln());
        }
    }
    let flagged = tail - x.len();
    if x.len() < 2 {
        return Err(Error::Saturation);
    }
    let (rate, residual) = fit_line(&x, &y);
    Ok(RateEstimate {
        rate,
        window: (series.times[start], series.times[n - 1]),
        residual,
        saturated: 2 * flagged > tail,
        restriction_rate: None,
    })
}

/// Extended Lyapunov index of `f(t1, t2)` sampled on a grid, over `min(t1, t2) >= threshold`.
///
/// For each value `m` of `min(t1, t2)` the largest `log f` is kept, which
/// realizes the supremum over the grid points sharing that `m`. The rate is
/// the least-squares slope of these maxima against `m`.
pub fn extended_index_estimate(grid: &[(f64, f64, f64)], threshold: f64) -> Result<RateEstimate> {
    // Keyed by the bit pattern of m; non-negative floats order like their bits.
    let mut best: BTreeMap<u64, f64> = BTreeMap::new();
    let mut flagged = 0usize;
    let mut total = 0usize;
    let mut restriction = Vec::new();
    for &(t1, t2, v) in grid {
        if !t1.is_finite() || !t2.is_finite() || !(v >= 0.0) || v.is_infinite() {
            return Err(Error::NonFinite);
        }
        let m = t1.min(t2);
        if m < threshold || m < 0.0 {
            continue;
        }
        total += 1;
        if v < UNDERFLOW_FLOOR {
            flagged += 1;
            continue;
        }
        let lv = v.ln();
        best.entry(m.to_bits()).and_modify(|b| *b = b.max(lv)).or_insert(lv);
        if (t1 - 2.0 * t2).abs() <= 1e-9 * t1.abs().max(1.0) {
            restriction.push((t2, lv));
        }
    }
    if total == 0 {
        return Err(Error::Coverage(format!("no grid points with min(t1, t2) >= {threshold}")));
    }
    if best.len() < 3 {
        if best.is_empty() && flagged > 0 {
            return Err(Error::Saturation);
        }
        return Err(Error::Coverage(format!(
            "need 3 distinct values of min(t1, t2) above {threshold}, have {}",
            best.len()
        )));
    }
    let x: Vec<f64> = best.keys().map(|&b| f64::from_bits(b)).collect();
    let y: Vec<f64> = best.values().copied().collect();
    let (rate, residual) = fit_line(&x, &y);
    let restriction_rate = if restriction.len() >= 2 {
        restriction.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (rx, ry): (Vec<f64>, Vec<f64>) = restriction.into_iter().unzip();
        Some(fit_line(&rx, &ry).0)
    } else {
        None
    };
    Ok(RateEstimate {
        rate,
        window: (x[0], x[x.len() - 1]),
        residual,
        saturated: 2 * flagged > total,
        restriction_rate,
    })
}
