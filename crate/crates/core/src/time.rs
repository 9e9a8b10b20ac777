use crate::error::{Error, Result};

/// Time axis of a cocycle: integers, or reals sampled at `base_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeDomain {
    Discrete,
    Continuous { base_step: f64 },
}

impl TimeDomain {
    pub fn continuous(base_step: f64) -> Result<Self> {
        if !(base_step > 0.0 && base_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("base_step must be positive, got {base_step}")));
        }
        Ok(Self::Continuous { base_step })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete)
    }

    /// Smallest natural time increment (1 for discrete time).
    pub fn base_step(&self) -> f64 {
        match self {
            Self::Discrete => 1.0,
            Self::Continuous { base_step } => *base_step,
        }
    }

    /// Rejects non-finite times and non-integer times in discrete mode.
    pub fn check(&self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(Error::InvalidTime { time: t });
        }
        if self.is_discrete() && (t - t.round()).abs() > 1e-9 {
            return Err(Error::InvalidTime { time: t });
        }
        Ok(())
    }

    /// Number of `step`-sized increments in `t`, if `t` is such a multiple.
    pub fn steps_in(t: f64, step: f64) -> Option<usize> {
        let n = (t / step).round();
        if n < 0.0 || (n * step - t).abs() > 1e-9 * t.abs().max(1.0) {
            None
        } else {
            Some(n as usize)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrete_rejects_fractional_time() {
        assert!(TimeDomain::Discrete.check(1.5).is_err());
        assert!(TimeDomain::Discrete.check(-3.0).is_ok());
        assert!(TimeDomain::continuous(0.1).unwrap().check(1.55).is_ok());
        assert!(TimeDomain::continuous(0.0).is_err());
    }

    #[test]
    fn step_counting() {
        assert_eq!(TimeDomain::steps_in(20.25, 0.05), Some(405));
        assert_eq!(TimeDomain::steps_in(1.0, 0.3), None);
        assert_eq!(TimeDomain::steps_in(0.0, 1.0), Some(0));
    }
}
