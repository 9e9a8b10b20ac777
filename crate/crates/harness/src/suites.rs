//! Property suites behind `clv verify`. Every suite draws from a fixed seed
//! and reports each property with the worst margin it observed.

use clv_core::admissibility::{admissibility, propagation_bound_check};
use clv_core::cocycle::{
    degenerate_rotating_cocycle, diagonal_cocycle, finite_time_les, rotating_cocycle, Cocycle,
};
use clv_core::ginelli::{
    backward_phase, convergence_study, forward_phase, les_from_forward, random_tuples, run_ginelli, GinelliConfig,
    StudyConfig,
};
use clv_core::index::{lyapunov_index_estimate, TimeSeries};
use clv_core::linalg::{self, Mat};
use clv_core::subspace::{apply_map, cos_angle, distance, gram_schmidt, intersect_alternating};
use clv_core::{DegeneracyPattern, Subspace, TimeDomain, VectorTuple};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::checks::Check;
use crate::config::DynCocycle;
use crate::error::{HarnessError, Result};

pub const VERIFY_SEED: u64 = 42;

pub const SUITES: &[&str] = &["subspace_geometry", "lyapunov_index", "cocycle", "admissibility", "ginelli"];

/// Builtins addressable with `--cocycle`. Gaps stay at or below 0.6 so that
/// roundoff amplified by `e^{gap |t|}` stays below 1e-9 at `|t| = 20`.
pub const BUILTINS: &[&str] = &["diagonal", "rotating", "degenerate_rotating"];

pub fn builtin(name: &str) -> Option<(DynCocycle, DegeneracyPattern)> {
    let b: (DynCocycle, DegeneracyPattern) = match name {
        "diagonal" => (
            Box::new(diagonal_cocycle(&[0.5, 0.1, -0.3, -0.9], TimeDomain::Discrete).ok()?),
            DegeneracyPattern::simple(4),
        ),
        "rotating" => (Box::new(rotating_cocycle(0.3, -0.3, TimeDomain::Discrete).ok()?), DegeneracyPattern::simple(2)),
        "degenerate_rotating" => (
            Box::new(degenerate_rotating_cocycle(0.3, 0.37, Some(-0.3), TimeDomain::Discrete).ok()?),
            DegeneracyPattern::new(vec![2, 2]).ok()?,
        ),
        _ => return None,
    };
    Some(b)
}

pub fn run_suite(name: &str, cocycle: Option<&str>) -> Result<Vec<Check>> {
    let cocycles: Vec<&str> = match cocycle {
        Some(c) if BUILTINS.contains(&c) => vec![c],
        Some(c) => {
            return Err(HarnessError::field("--cocycle", format!("unknown builtin `{c}`; choose from {}", BUILTINS.join(", "))))
        }
        None => BUILTINS.to_vec(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    match name {
        "subspace_geometry" => subspace_geometry(&mut rng),
        "lyapunov_index" => lyapunov_index(),
        "cocycle" => cocycles.iter().map(|c| cocycle_suite(c, &mut rng)).collect::<Result<Vec<_>>>().map(concat),
        "admissibility" => admissibility_suite(&mut rng),
        "ginelli" => cocycles.iter().map(|c| ginelli_suite(c)).collect::<Result<Vec<_>>>().map(concat),
        _ => Err(HarnessError::UnknownSuite { name: name.to_string(), available: SUITES.join(", ") }),
    }
}

fn concat(v: Vec<Vec<Check>>) -> Vec<Check> {
    v.into_iter().flatten().collect()
}

fn worst<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, f64::max)
}

fn random_subspace<R: Rng>(rng: &mut R, d: usize, k: usize) -> Subspace {
    Subspace::span(&linalg::gaussian_matrix(rng, d, k)).expect("gaussian columns are independent")
}

/// Subspaces `M` (dim `m`) and `N` (dim `n`) of `R^d` whose intersection is a
/// planted `shared`-dimensional space, also returned.
pub fn planted_pair<R: Rng>(rng: &mut R, d: usize, m: usize, n: usize, shared: usize) -> (Subspace, Subspace, Subspace) {
    assert!(shared <= m && shared <= n && m + n - shared <= d);
    let q = linalg::random_orthogonal(rng, d);
    let common = q.columns(0, shared).into_owned();
    let private_m = q.columns(shared, m - shared).into_owned();
    let fresh = q.columns(m, n - shared).into_owned();
    let mut a = Mat::zeros(d, m);
    a.columns_mut(0, shared).copy_from(&common);
    a.columns_mut(shared, m - shared).copy_from(&private_m);
    // N leans toward M's private part so the angle between them is not trivial.
    let mix = linalg::gaussian_matrix(rng, m - shared, n - shared) * 0.5;
    let mut b = Mat::zeros(d, n);
    b.columns_mut(0, shared).copy_from(&common);
    b.columns_mut(shared, n - shared).copy_from(&(fresh + private_m * mix));
    let span = |x: &Mat| Subspace::span(x).expect("planted bases are independent");
    (span(&a), span(&b), span(&common))
}

/// Largest excess `‖(P_M P_N)^k − P_{M∩N}‖ − c^{2k−1}` over `k = 1..=max_k`.
pub fn alternating_excess(m: &Subspace, n: &Subspace, common: &Subspace, max_k: i32) -> Result<f64> {
    let c = cos_angle(m, n, 1e-12)?;
    let step = m.projector() * n.projector();
    let p = common.projector();
    let mut x = step.clone();
    let mut excess = f64::NEG_INFINITY;
    for k in 1..=max_k {
        let lhs = linalg::singular_values(&(&x - &p))[0];
        excess = excess.max(lhs - c.powi(2 * k - 1));
        x = &x * &step;
    }
    Ok(excess)
}

fn subspace_geometry(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let mut symmetry = 0.0f64;
    let mut triangle = f64::NEG_INFINITY;
    let mut complement = 0.0f64;
    let mut invariance = 0.0f64;
    for _ in 0..200 {
        let k = rng.random_range(1..4);
        let (a, b, c) = (random_subspace(rng, 5, k), random_subspace(rng, 5, k), random_subspace(rng, 5, k));
        let ab = distance(&a, &b)?;
        symmetry = symmetry.max((ab - distance(&b, &a)?).abs());
        triangle = triangle.max(ab - distance(&a, &c)? - distance(&c, &b)?);
        complement = complement.max((ab - distance(&a.complement(), &b.complement())?).abs());
        let v = linalg::random_orthogonal(rng, 5);
        let moved = distance(&Subspace::from_orthonormal(&v * a.basis())?, &Subspace::from_orthonormal(&v * b.basis())?)?;
        invariance = invariance.max((moved - ab).abs());
    }
    let mut bound = f64::NEG_INFINITY;
    let mut recovery = 0.0f64;
    for _ in 0..100 {
        let shared = rng.random_range(1..3);
        let (m, n, common) = planted_pair(rng, 6, 3, 3, shared);
        bound = bound.max(alternating_excess(&m, &n, &common, 20)?);
        recovery = recovery.max(distance(&intersect_alternating(&m, &n, 1e-12)?, &common)?);
    }
    let mut gs = 0.0f64;
    for _ in 0..100 {
        let pattern = DegeneracyPattern::new(vec![1, 2, 1])?;
        let tuple = VectorTuple::new(linalg::gaussian_matrix(rng, 4, 4));
        let f = gram_schmidt(&tuple, &pattern)?;
        for (i, &k) in pattern.cumulative().iter().enumerate() {
            let prefix = Subspace::span(&tuple.vectors().columns(0, k).into_owned())?;
            gs = gs.max(distance(&prefix, &f.spaces[i])?);
        }
    }
    Ok(vec![
        Check::at_most("distance_symmetry", symmetry, 1e-12),
        Check::at_most("triangle_inequality", triangle, 1e-12),
        Check::at_most("complement_distance", complement, 1e-12),
        Check::at_most("orthogonal_invariance", invariance, 1e-12),
        Check::at_most("alternating_projection_bound", bound, 1e-10),
        Check::at_most("planted_intersection", recovery, 1e-8),
        Check::at_most("gram_schmidt_filtration", gs, 1e-10),
    ])
}

fn lyapunov_index() -> Result<Vec<Check>> {
    let times: Vec<f64> = (1..=80).map(f64::from).collect();
    let rate = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        Ok(lyapunov_index_estimate(&TimeSeries::from_fn(TimeDomain::Discrete, times.clone(), f)?, 0.5)?.rate)
    };
    let base = |t: f64| (0.7 * t).exp() * (2.0 + t.sin());
    let r0 = rate(&base)?;
    let mut scale = 0.0f64;
    for alpha in [1e-6, 1e6] {
        scale = scale.max((rate(&|t| alpha * base(t))? - r0).abs());
    }
    let mut power = 0.0f64;
    for alpha in [0.5, 2.0, 3.0] {
        power = power.max((rate(&|t| base(t).powf(alpha))? - alpha * r0).abs());
    }
    let sum = rate(&|t| (0.3 * t).exp() + (-0.4 * t).exp())? - 0.3;
    let known = (rate(&|t| (-1.25 * t).exp())? + 1.25).abs();
    Ok(vec![
        Check::at_most("scale_invariance", scale, 1e-9),
        Check::at_most("power_rule", power, 1e-9),
        Check::at_most("sum_rule", sum, 0.02),
        Check::at_most("exact_exponential", known, 1e-9),
    ])
}

fn sample_time<R: Rng>(rng: &mut R, domain: TimeDomain) -> f64 {
    match domain {
        TimeDomain::Discrete => f64::from(rng.random_range(-20i32..=20)),
        TimeDomain::Continuous { base_step } => f64::from(rng.random_range(-400i32..=400)) * base_step,
    }
}

/// `‖A − BC‖ / (‖B‖ ‖C‖)`, the backward-stable scale for a product.
fn product_error(a: &Mat, b: &Mat, c: &Mat) -> f64 {
    (a - b * c).norm() / (b.norm() * c.norm())
}

fn cocycle_suite(name: &str, rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let (c, _) = builtin(name).expect("registered builtin");
    let domain = c.time_domain();
    let d = c.dim();
    let mut identity = 0.0f64;
    let mut inverse = 0.0f64;
    for _ in 0..50 {
        let (s, t) = (sample_time(rng, domain), sample_time(rng, domain));
        let w = f64::from(rng.random_range(-200i32..=200)) * 0.05;
        let left = c.propagate(s, &c.flow(t, &w)?)?;
        let right = c.propagate(t, &w)?;
        identity = identity.max(product_error(&c.propagate(s + t, &w)?, &left, &right));
        let back = c.propagate(-t, &c.flow(t, &w)?)?;
        inverse = inverse.max(product_error(&Mat::identity(d, d), &back, &right));
    }
    let mut covariance = 0.0f64;
    let w = 0.3;
    for t in [1.0, -1.0, 5.0, -5.0, 20.0, -20.0] {
        let here = c.oseledets(&w)?;
        let there = c.oseledets(&c.flow(t, &w)?)?;
        let phi = c.propagate(t, &w)?;
        for (e, target) in here.spaces.iter().zip(&there.spaces) {
            covariance = covariance.max(distance(&apply_map(&phi, e)?, target)?);
        }
    }
    let expected = c.oseledets(&w)?.spectrum.expanded();
    let les = finite_time_les(&c, &w, 100.0)?;
    let le_error = worst(les.iter().zip(&expected).map(|(a, b)| (a - b).abs()));
    let le_bound = if name == "degenerate_rotating" { 0.02 } else { 1e-8 };
    Ok(vec![
        Check::at_most(format!("{name}/cocycle_identity"), identity, 1e-9),
        Check::at_most(format!("{name}/inverse"), inverse, 1e-9),
        Check::at_most(format!("{name}/covariance"), covariance, 1e-9),
        Check::at_most(format!("{name}/finite_time_exponents"), le_error, le_bound),
    ])
}

fn admissibility_suite(rng: &mut ChaCha8Rng) -> Result<Vec<Check>> {
    let patterns = [
        DegeneracyPattern::simple(4),
        DegeneracyPattern::new(vec![2, 2])?,
        DegeneracyPattern::new(vec![1, 2, 1])?,
    ];
    let mut invariance = 0.0f64;
    let mut gs = 0.0f64;
    let mut lemma = 0.0f64;
    let mut propagation = f64::INFINITY;
    let mut admissible = 0usize;
    for k in 0..100 {
        let pattern = &patterns[k % patterns.len()];
        let tuple = VectorTuple::new(linalg::uniform_ball_tuple(rng, 4, 4, 1.0));
        let reference = VectorTuple::new(linalg::random_orthogonal(rng, 4));
        let v = linalg::random_orthogonal(rng, 4);
        let report = admissibility(&tuple, &reference, pattern)?;
        invariance = invariance
            .max((report.delta_max - admissibility(&tuple.mapped(&v), &reference.mapped(&v), pattern)?.delta_max).abs());
        let gs_tuple = VectorTuple::new(gram_schmidt(&tuple, pattern)?.basis().clone());
        gs = gs.max((report.delta_max - admissibility(&gs_tuple, &reference, pattern)?.delta_max).abs());
        lemma = lemma.max((report.delta_max - report.lemma_delta).abs());
        admissible += usize::from(report.delta_max > 0.0);

        let sigma: Vec<f64> = (0..4).map(|j| (3.0 - 2.0 * j as f64 + rng.random_range(-0.5..0.5)).exp()).collect();
        let a = linalg::random_orthogonal(rng, 4)
            * Mat::from_diagonal(&linalg::Vector::from_vec(sigma))
            * linalg::random_orthogonal(rng, 4).transpose();
        for level in propagation_bound_check(&a, &tuple, pattern)? {
            propagation = propagation.min(level.margin);
        }
    }
    Ok(vec![
        Check::at_most("orthogonal_invariance", invariance, 1e-10),
        Check::at_most("gram_schmidt_invariance", gs, 1e-10),
        Check::at_most("projected_mass_agreement", lemma, 1e-9),
        Check::at_least("propagation_bound_margin", propagation, -clv_core::admissibility::PROPAGATION_SLACK),
        Check::at_least("random_tuples_admissible", admissible as f64, 100.0),
    ])
}

fn ginelli_suite(name: &str) -> Result<Vec<Check>> {
    let (c, pattern) = builtin(name).expect("registered builtin");
    let omega0 = 0.0;
    let reference = c.oseledets(&omega0)?;
    let times = [10.0, 15.0, 20.0, 25.0];
    let study = convergence_study(&c, &omega0, &reference, &StudyConfig::diagonal(&times, 10, VERIFY_SEED, 1.0))?;
    let rate_excess = worst(study.rates.iter().zip(&study.expected_rates).map(|(r, e)| r.rate - e).chain([f64::MIN]));

    // Filtration invariance across QR frequencies.
    let t = 10.0;
    let mut rng = ChaCha8Rng::seed_from_u64(VERIFY_SEED);
    let (init, alpha) = random_tuples(&mut rng, &pattern);
    let records = [1.0, 5.0, t]
        .iter()
        .map(|&tau| forward_phase(&c, &omega0, &GinelliConfig::new(t, t, tau, pattern.clone()), &init))
        .collect::<clv_core::Result<Vec<_>>>()?;
    let mut filtration = 0.0f64;
    for a in &records {
        for b in &records {
            for k in pattern.cumulative() {
                let span = |m: &Mat| Subspace::from_orthonormal(m.columns(0, k).into_owned());
                filtration = filtration.max(distance(&span(a.final_frame())?, &span(b.final_frame())?)?);
            }
        }
    }

    // Stored R inverses against direct backward propagation.
    let cfg = GinelliConfig::new(20.0, 10.0, 1.0, pattern.clone());
    let rec = forward_phase(&c, &omega0, &cfg, &init)?;
    let back = backward_phase(&rec, &alpha, &cfg)?;
    let direct = c.propagate(-10.0, &c.flow(10.0, &omega0)?)? * rec.final_frame() * &alpha;
    let mut equivalence = 0.0f64;
    for i in 0..pattern.len() {
        let r = pattern.block_range(i);
        let expected = Subspace::span(&direct.columns(r.start, r.len()).into_owned())?;
        equivalence = equivalence.max(distance(&back.at_origin[i], &expected)?);
    }

    // Interval outputs against the propagated origin blocks.
    let cfg = GinelliConfig::new(30.0, 30.0, 1.0, pattern.clone())
        .with_seed(VERIFY_SEED)
        .with_interval(vec![-2.0, -1.0, 1.0, 2.0]);
    let res = run_ginelli(&c, &omega0, &cfg)?;
    let mut covariance = 0.0f64;
    for (m, blocks) in &res.subspaces_on_interval {
        let phi = c.propagate(*m, &omega0)?;
        for (u, v) in res.subspaces_at_origin.iter().zip(blocks) {
            covariance = covariance.max(distance(&apply_map(&phi, u)?, v)?);
        }
    }
    let deterministic = res == run_ginelli(&c, &omega0, &cfg)?;

    let mut checks = vec![
        Check::at_most(format!("{name}/rate_bound"), rate_excess, 0.1),
        Check::at_least(format!("{name}/trial_success_fraction"), study.trial_success_fraction.unwrap_or(0.0), 1.0),
        Check::at_most(format!("{name}/filtration_invariance"), filtration, 1e-8),
        Check::at_most(format!("{name}/backward_equivalence"), equivalence, 1e-8),
        Check::at_most(format!("{name}/output_covariance"), covariance, 1e-9),
        Check::boolean(format!("{name}/determinism"), deterministic, "two runs with one seed"),
    ];
    if name == "diagonal" {
        let rec = forward_phase(&c, &omega0, &GinelliConfig::new(5.0, 20.0, 1.0, pattern.clone()), &VectorTuple::standard_basis(4))?;
        let les = les_from_forward(&rec, None)?;
        let err = worst(les.column_rates.iter().zip(reference.spectrum.expanded()).map(|(a, b)| (a - b).abs()));
        checks.push(Check::at_most(format!("{name}/exponents_exact"), err, 1e-14));
    }
    Ok(checks)
}
