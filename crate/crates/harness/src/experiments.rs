//! The experiment registry. Each experiment turns a config into a summary
//! table, a plot-ready series table and a list of checks.

use std::time::Instant;

use clv_core::admissibility::{sample_nonadmissible_fraction, sample_nonextendable_fraction};
use clv_core::cocycle::OseledetsData;
use clv_core::ginelli::{convergence_study, forward_phase, les_from_forward, random_tuples, run_ginelli, GinelliConfig, StudyConfig};
use clv_core::subspace::distance;
use clv_core::{DegeneracyPattern, Subspace};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::checks::Check;
use crate::config::{pattern_or_simple, CocycleSpec, DynCocycle, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::output::{self, col, Metadata, Table, SCHEMA_VERSION};

type Runner = fn(&ExperimentConfig) -> Result<Outcome>;

const REGISTRY: &[(&str, &str, Runner)] = &[
    ("convergence", "fitted convergence rates of the Oseledets blocks over a runtime grid", convergence),
    ("admissibility_scaling", "Monte Carlo measure of non-admissible tuples as δ shrinks", admissibility_scaling),
    ("lyapunov_spectrum", "Lyapunov exponents from the forward QR record", lyapunov_spectrum),
    ("ginelli_run", "one run of the algorithm with distances to the closed-form splitting", ginelli_run),
];

pub fn names() -> Vec<&'static str> {
    REGISTRY.iter().map(|e| e.0).collect()
}

pub fn is_registered(name: &str) -> bool {
    REGISTRY.iter().any(|e| e.0 == name)
}

/// `(name, description)` pairs for `--list`.
pub fn listing() -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().map(|e| (e.0, e.1)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub table: Table,
    pub series: Table,
    pub checks: Vec<Check>,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (_, _, runner) = REGISTRY.iter().find(|e| e.0 == cfg.experiment).ok_or_else(|| {
        HarnessError::UnknownExperiment { name: cfg.experiment.clone(), available: names().join(", ") }
    })?;
    runner(cfg)
}

/// Runs the experiment and writes `<output>_table` and `<output>_series`.
pub fn execute(cfg: &ExperimentConfig) -> Result<Outcome> {
    let start = Instant::now();
    let outcome = run(cfg)?;
    let meta = Metadata {
        experiment: cfg.experiment.clone(),
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        version: env!("CARGO_PKG_VERSION"),
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    output::write(&cfg.output_path("table"), &outcome.table, &meta, cfg.format)?;
    output::write(&cfg.output_path("series"), &outcome.series, &meta, cfg.format)?;
    Ok(outcome)
}

fn reference(c: &DynCocycle, cfg: &ExperimentConfig) -> Option<OseledetsData> {
    c.oseledets(&cfg.omega0).ok()
}

fn run_pattern(cfg: &ExperimentConfig, c: &DynCocycle, sizes: &Option<Vec<usize>>) -> Result<DegeneracyPattern> {
    match (sizes, reference(c, cfg)) {
        (None, Some(r)) => Ok(r.spectrum.pattern().clone()),
        _ => pattern_or_simple(sizes, c.dim(), "ginelli.pattern"),
    }
}

fn ginelli_config(cfg: &ExperimentConfig, c: &DynCocycle) -> Result<GinelliConfig> {
    let g = cfg.require_ginelli()?;
    let mut run = GinelliConfig::new(g.t1, g.t2, g.ortho_interval, run_pattern(cfg, c, &g.pattern)?)
        .with_seed(cfg.seed)
        .with_interval(g.interval.clone());
    run.grouping_tol = g.grouping_tol;
    run.steps(c.time_domain()).map_err(|e| HarnessError::field("ginelli", e.to_string()))?;
    Ok(run)
}

fn log_or_nan(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NAN
    }
}

fn convergence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let c = cfg.require_cocycle()?.build()?;
    let reference = reference(&c, cfg)
        .ok_or_else(|| HarnessError::field("cocycle", "convergence needs a cocycle with a closed-form splitting"))?;
    let grid = cfg.grid.as_ref().ok_or_else(|| HarnessError::field("grid", "required by this experiment"))?.cells()?;
    let ortho = cfg.ginelli.as_ref().map_or(1.0, |g| g.ortho_interval);
    let tol = cfg.tolerance.unwrap_or(0.1);
    let study = convergence_study(&c, &cfg.omega0, &reference, &StudyConfig::new(grid, cfg.trials, cfg.seed, ortho))?;

    let mut table = Table::new(vec![
        col("block", "index"),
        col("dim", "count"),
        col("fitted_rate", "1/time"),
        col("expected_rate", "1/time"),
        col("fit_residual", "log"),
        col("window_start", "time"),
        col("window_end", "time"),
        col("saturated", "bool"),
        col("restriction_rate", "1/time"),
    ]);
    let mut checks = Vec::new();
    let sizes = reference.spectrum.pattern().sizes();
    for (i, expected) in study.expected_rates.iter().enumerate() {
        let fit = study.rates.get(i);
        table.push(vec![
            i.into(),
            sizes[i].into(),
            fit.map(|r| r.rate).into(),
            (*expected).into(),
            fit.map(|r| r.residual).into(),
            fit.map(|r| r.window.0).into(),
            fit.map(|r| r.window.1).into(),
            fit.is_some_and(|r| r.saturated).into(),
            fit.and_then(|r| r.restriction_rate).into(),
        ]);
        if expected.is_finite() {
            let name = format!("rate_block_{i}");
            checks.push(match fit {
                Some(r) => Check::at_most(name, (r.rate - expected).abs(), tol)
                    .with_detail(format!("fitted {:.4}, expected {expected:.4}", r.rate)),
                None => Check::failed(name, "grid needs three distinct values of min(t1, t2)"),
            });
        }
    }
    if let Some(f) = study.trial_success_fraction {
        checks.push(Check::at_least("trial_success_fraction", f, 1.0).with_detail(format!("ε = {:.4}", study.epsilon)));
    }

    let mut series = Table::new(vec![
        col("t1", "time"),
        col("t2", "time"),
        col("time", "time"),
        col("block", "index"),
        col("distance", "1"),
        col("log_distance", "log"),
        col("success_fraction", "1"),
    ]);
    for cell in &study.cells {
        for (i, &d) in cell.sup_distance.iter().enumerate() {
            series.push(vec![
                cell.t1.into(),
                cell.t2.into(),
                cell.t1.min(cell.t2).into(),
                i.into(),
                d.into(),
                log_or_nan(d).into(),
                cell.success_fraction.into(),
            ]);
        }
    }
    Ok(Outcome { table, series, checks })
}

fn admissibility_scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg
        .admissibility
        .as_ref()
        .ok_or_else(|| HarnessError::field("admissibility", "required by this experiment"))?;
    let pattern = pattern_or_simple(&spec.pattern, spec.dim, "admissibility.pattern")?;
    let sample = if spec.extendable { sample_nonextendable_fraction } else { sample_nonadmissible_fraction };
    let fractions = spec
        .deltas
        .iter()
        .map(|&delta| sample(spec.dim, spec.radius, &pattern, delta, spec.samples, cfg.seed))
        .collect::<clv_core::Result<Vec<f64>>>()?;

    // Envelope η δ^{1/(d-1)} with η fitted at the first (coarsest) δ.
    let exponent = 1.0 / (spec.dim as f64 - 1.0);
    let eta = fractions[0] / spec.deltas[0].powf(exponent);
    let envelope: Vec<f64> = spec.deltas.iter().map(|d| eta * d.powf(exponent)).collect();

    let mut table = Table::new(vec![
        col("delta", "1"),
        col("fraction", "1"),
        col("envelope", "1"),
        col("under_envelope", "bool"),
        col("samples", "count"),
    ]);
    let mut series = Table::new(vec![
        col("delta", "1"),
        col("log_delta", "log"),
        col("fraction", "1"),
        col("log_fraction", "log"),
    ]);
    for ((&delta, &f), &e) in spec.deltas.iter().zip(&fractions).zip(&envelope) {
        table.push(vec![delta.into(), f.into(), e.into(), (f <= e + 1e-12).into(), spec.samples.into()]);
        series.push(vec![delta.into(), log_or_nan(delta).into(), f.into(), log_or_nan(f).into()]);
    }

    let worst_step = fractions.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let mut checks = Vec::new();
    if fractions.len() > 1 {
        checks.push(
            Check::boolean("strictly_decreasing", worst_step < 0.0, format!("largest step {worst_step:.4e}")),
        );
    }
    let excess = fractions.iter().zip(&envelope).map(|(f, e)| f - e).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::at_most("under_envelope", excess, 1e-12).with_detail(format!("η = {eta:.4}")));
    if let Some(threshold) = spec.final_threshold {
        checks.push(Check::at_most("final_fraction", fractions[fractions.len() - 1], threshold));
    }
    Ok(Outcome { table, series, checks })
}

/// At most this many rows in the running-estimate series.
const MAX_SERIES_POINTS: usize = 1000;

fn lyapunov_spectrum(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.require_cocycle()?;
    let c = spec.build()?;
    let run = ginelli_config(cfg, &c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (init, _) = random_tuples(&mut rng, &run.pattern);
    let rec = forward_phase(&c, &cfg.omega0, &run, &init)?;
    let les = les_from_forward(&rec, run.grouping_tol)?;
    let analytic = reference(&c, cfg).map(|r| r.spectrum.expanded());

    let mut table = Table::new(vec![
        col("index", "index"),
        col("estimate", "1/time"),
        col("analytic", "1/time"),
        col("abs_error", "1/time"),
        col("group", "index"),
    ]);
    let mut group_of = Vec::new();
    for (g, &n) in les.spectrum.pattern().sizes().iter().enumerate() {
        group_of.extend(std::iter::repeat_n(g, n));
    }
    for (j, &rate) in les.column_rates.iter().enumerate() {
        let exact = analytic.as_ref().map(|a| a[j]);
        table.push(vec![
            j.into(),
            rate.into(),
            exact.into(),
            exact.map(|a| (rate - a).abs()).into(),
            group_of[j].into(),
        ]);
    }

    let mut series = Table::new(vec![col("time", "time"), col("index", "index"), col("estimate", "1/time")]);
    let (origin, total) = (rec.origin_index, rec.steps());
    let stride = (total - origin).div_ceil(MAX_SERIES_POINTS).max(1);
    for k in (origin + 1..=total).filter(|k| (k - origin) % stride == 0 || *k == total) {
        let t = rec.time_of(k);
        for (j, (a, b)) in rec.log_r_diag_sums[k].iter().zip(&rec.log_r_diag_sums[origin]).enumerate() {
            series.push(vec![t.into(), j.into(), ((a - b) / t).into()]);
        }
    }

    let mut checks = Vec::new();
    if let Some(a) = &analytic {
        let err = les.column_rates.iter().zip(a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("max_abs_error", err, cfg.tolerance.unwrap_or(1e-6)));
    }
    if let CocycleSpec::Lorenz63 { sigma, beta, .. } = spec {
        let sum: f64 = les.column_rates.iter().sum();
        let divergence = -(sigma + 1.0 + beta);
        checks.push(
            Check::at_most("exponent_sum", (sum - divergence).abs(), cfg.tolerance.unwrap_or(0.1))
                .with_detail(format!("sum {sum:.4}, divergence {divergence:.4}")),
        );
        if les.column_rates.len() == 3 {
            checks.push(Check::at_most("neutral_exponent", les.column_rates[1].abs(), 0.05));
        }
    }
    Ok(Outcome { table, series, checks })
}

fn ginelli_run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let spec = cfg.require_cocycle()?;
    let c = spec.build()?;
    let run = ginelli_config(cfg, &c)?;
    let res = run_ginelli(&c, &cfg.omega0, &run)?;

    let mut table = Table::new(vec![
        col("time", "time"),
        col("block", "index"),
        col("dim", "count"),
        col("distance", "1"),
        col("exponent", "1/time"),
    ]);
    let sizes = run.pattern.sizes();
    let group_rate = |i: usize| {
        let r = run.pattern.block_range(i);
        res.les.column_rates[r.clone()].iter().sum::<f64>() / r.len() as f64
    };
    let mut outputs = vec![(0.0, res.subspaces_at_origin.clone())];
    outputs.extend(res.subspaces_on_interval.iter().cloned());
    let mut worst_at_origin = None::<f64>;
    for (m, blocks) in &outputs {
        let here = c.flow(*m, &cfg.omega0)?;
        let reference = c.oseledets(&here).ok();
        for (i, u) in blocks.iter().enumerate() {
            let d = match &reference {
                Some(r) if r.spaces.len() == blocks.len() => Some(distance(u, &r.spaces[i])?),
                _ => None,
            };
            if *m == 0.0 {
                if let Some(d) = d {
                    worst_at_origin = Some(worst_at_origin.map_or(d, |w| w.max(d)));
                }
            }
            table.push(vec![(*m).into(), i.into(), sizes[i].into(), d.into(), group_rate(i).into()]);
        }
    }

    let mut series = Table::new(vec![
        col("time", "time"),
        col("block", "index"),
        col("distance", "1"),
        col("log_distance", "log"),
    ]);
    for (i, s) in res.diagnostics.iter().enumerate() {
        for (t, d) in s.samples() {
            series.push(vec![t.into(), i.into(), d.into(), log_or_nan(d).into()]);
        }
    }

    let mut checks = Vec::new();
    if let Some(w) = worst_at_origin {
        checks.push(Check::at_most("distance_at_origin", w, cfg.tolerance.unwrap_or(1e-5)));
    }
    if let (CocycleSpec::Lorenz63 { .. }, 3) = (spec, res.vectors_at_origin.ncols()) {
        checks.push(Check::at_most("flow_direction_angle", flow_direction_angle(spec, cfg.omega0, &res.vectors_at_origin)?, 0.05));
    }
    Ok(Outcome { table, series, checks })
}

/// Angle between the middle CLV and the vector field at `omega0`.
fn flow_direction_angle(spec: &CocycleSpec, omega0: f64, vectors: &clv_core::Mat) -> Result<f64> {
    let CocycleSpec::Lorenz63 { sigma, rho, beta, step, transient } = spec else {
        return Err(HarnessError::field("cocycle", "flow direction is only defined for lorenz63"));
    };
    let params = clv_core::cocycle::Lorenz63Params { sigma: *sigma, rho: *rho, beta: *beta, step: *step, transient: *transient };
    let l = clv_core::cocycle::lorenz63(params)?;
    let f = l.vector_field(&l.point(omega0)?);
    let field = Subspace::from_vector(&clv_core::Vector::from_column_slice(f.as_slice()))?;
    let clv = Subspace::from_vector(&vectors.column(1).into_owned())?;
    Ok(distance(&clv, &field)?.asin())
}
