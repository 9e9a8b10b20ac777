use crate::error::{Error, Result};

/// Multiplicities `(d_1, ..., d_p)` grouping vectors into blocks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegeneracyPattern {
    sizes: Vec<usize>,
}

impl DegeneracyPattern {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::InvalidArgument("degeneracy pattern is empty".into()));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument("degeneracy sizes must be >= 1".into()));
        }
        Ok(Self { sizes })
    }

    /// The nondegenerate pattern `(1, ..., 1)`.
    pub fn simple(dim: usize) -> Self {
        Self { sizes: vec![1; dim.max(1)] }
    }

    /// Groups a sequence of values into runs of equal entries.
    pub fn from_runs(values: &[f64], tol: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("cannot group an empty list".into()));
        }
        let mut sizes = vec![1];
        for w in values.windows(2) {
            if (w[0] - w[1]).abs() <= tol {
                *sizes.last_mut().unwrap() += 1;
            } else {
                sizes.push(1);
            }
        }
        Ok(Self { sizes })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks `p`.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// `d_1 + ... + d_i` for `i = 1..=p`.
    pub fn cumulative(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .scan(0, |acc, &s| {
                *acc += s;
                Some(*acc)
            })
            .collect()
    }

    /// Column range of block `i` (zero based).
    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        let start: usize = self.sizes[..i].iter().sum();
        start..start + self.sizes[i]
    }

    pub fn reversed(&self) -> Self {
        let mut sizes = self.sizes.clone();
        sizes.reverse();
        Self { sizes }
    }

    pub fn check_total(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: self.total() });
        }
        Ok(())
    }
}
