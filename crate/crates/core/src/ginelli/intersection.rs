use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GinelliConfig;
use crate::cocycle::Cocycle;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::subspace::{intersect_alternating, Subspace, DEFAULT_INTERSECTION_TOL};

/// Propagates `frame` by `steps` increments of `dt` (possibly negative),
/// re-orthonormalizing after each.
fn evolve_frame<C: Cocycle + ?Sized>(c: &C, start: &C::State, steps: usize, dt: f64, frame: Mat) -> Result<Mat> {
    let mut state = start.clone();
    let mut q = linalg::qr_positive(&frame).0;
    for _ in 0..steps {
        q = linalg::qr_positive(&(c.propagate(dt, &state)? * q)).0;
        state = c.flow(dt, &state)?;
    }
    Ok(q)
}

/// Oseledets spaces as intersections of forward and backward filtrations.
///
/// A random tuple evolved from `θ_{-t1} ω_0` gives `Ū_i ≈ E_1 ⊕ ... ⊕ E_i`;
/// one evolved backward from `θ_{t2} ω_0` gives, with the reversed pattern,
/// `E_p ⊕ ... ⊕ E_i`. Block `i` is their intersection, which must have
/// dimension `d_i`. In the `Transversality` error, `found = 0` means the
/// alternating projections did not settle.
pub fn intersection_variant<C: Cocycle + ?Sized>(
    c: &C,
    omega0: &C::State,
    cfg: &GinelliConfig,
) -> Result<Vec<Subspace>> {
    let d = c.dim();
    cfg.pattern.check_total(d)?;
    let (n1, n2) = cfg.steps(c.time_domain())?;
    let tau = cfg.ortho_interval;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let forward_init = linalg::uniform_ball_tuple(&mut rng, d, d, 1.0);
    let backward_init = linalg::uniform_ball_tuple(&mut rng, d, d, 1.0);
    let past = c.flow(-cfg.t1, omega0)?;
    let future = c.flow(cfg.t2, omega0)?;
    let forward = evolve_frame(c, &past, n1, tau, forward_init)?;
    let backward = evolve_frame(c, &future, n2, -tau, backward_init)?;

    let sizes = cfg.pattern.sizes();
    let cum = cfg.pattern.cumulative();
    let p = sizes.len();
    (0..p)
        .map(|i| {
            let fwd = Subspace::from_orthonormal(forward.columns(0, cum[i]).into_owned())?;
            let bwd_dim = d - cum[i] + sizes[i];
            let bwd = Subspace::from_orthonormal(backward.columns(0, bwd_dim).into_owned())?;
            match intersect_alternating(&fwd, &bwd, DEFAULT_INTERSECTION_TOL) {
                Ok(s) if s.dim() == sizes[i] => Ok(s),
                Ok(s) => Err(Error::Transversality { block: i, expected: sizes[i], found: s.dim() }),
                Err(Error::IterationLimit { .. }) => {
                    Err(Error::Transversality { block: i, expected: sizes[i], found: 0 })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}
