use super::{Cocycle, OseledetsData};
use crate::error::Result;
use crate::linalg::Mat;
use crate::time::TimeDomain;

/// The time-reversed cocycle `Φ^-(t, ω) = Φ(-t, ω)` over `θ^-_t = θ_{-t}`.
#[derive(Debug, Clone)]
pub struct Reversed<C>(pub C);

impl<C: Cocycle> Cocycle for Reversed<C> {
    type State = C::State;

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn time_domain(&self) -> TimeDomain {
        self.0.time_domain()
    }

    fn flow(&self, t: f64, omega: &Self::State) -> Result<Self::State> {
        self.0.flow(-t, omega)
    }

    fn propagate(&self, t: f64, omega: &Self::State) -> Result<Mat> {
        self.0.propagate(-t, omega)
    }

    fn oseledets(&self, omega: &Self::State) -> Result<OseledetsData> {
        Ok(self.0.oseledets(omega)?.reversed())
    }
}
