//! Experiment configuration: a single JSON document, parsed strictly.

use std::path::{Path, PathBuf};

use clv_core::cocycle::{
    degenerate_rotating_cocycle, diagonal_cocycle, lorenz63, random_product_cocycle, rotating_cocycle, Cocycle,
    EntryDistribution, Lorenz63Params,
};
use clv_core::{DegeneracyPattern, TimeDomain};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    #[default]
    Discrete,
    /// Continuous time with the given base step.
    Continuous(f64),
}

impl DomainSpec {
    fn build(self) -> Result<TimeDomain> {
        match self {
            DomainSpec::Discrete => Ok(TimeDomain::Discrete),
            DomainSpec::Continuous(step) => {
                TimeDomain::continuous(step).map_err(|e| HarnessError::field("cocycle.domain", e.to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistributionSpec {
    #[default]
    Gaussian,
    Uniform,
}

/// A builtin cocycle and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    Diagonal {
        lambdas: Vec<f64>,
        #[serde(default)]
        domain: DomainSpec,
    },
    Rotating {
        lambda1: f64,
        lambda2: f64,
        #[serde(default)]
        domain: DomainSpec,
    },
    DegenerateRotating {
        lambda1: f64,
        rot_speed: f64,
        #[serde(default)]
        lambda2: Option<f64>,
        #[serde(default)]
        domain: DomainSpec,
    },
    RandomProduct {
        dim: usize,
        seed: u64,
        #[serde(default)]
        distribution: DistributionSpec,
    },
    Lorenz63 {
        #[serde(default = "defaults::sigma")]
        sigma: f64,
        #[serde(default = "defaults::rho")]
        rho: f64,
        #[serde(default = "defaults::beta")]
        beta: f64,
        #[serde(default = "defaults::step")]
        step: f64,
        #[serde(default = "defaults::transient")]
        transient: f64,
    },
}

mod defaults {
    pub fn sigma() -> f64 {
        10.0
    }
    pub fn rho() -> f64 {
        28.0
    }
    pub fn beta() -> f64 {
        8.0 / 3.0
    }
    pub fn step() -> f64 {
        1e-3
    }
    pub fn transient() -> f64 {
        100.0
    }
    pub fn ortho_interval() -> f64 {
        1.0
    }
    pub fn trials() -> usize {
        20
    }
    pub fn radius() -> f64 {
        1.0
    }
    pub fn samples() -> usize {
        20_000
    }
    pub fn output() -> String {
        "clv_out".into()
    }
}

pub type DynCocycle = Box<dyn Cocycle<State = f64>>;

impl CocycleSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CocycleSpec::Diagonal { .. } => "diagonal",
            CocycleSpec::Rotating { .. } => "rotating",
            CocycleSpec::DegenerateRotating { .. } => "degenerate_rotating",
            CocycleSpec::RandomProduct { .. } => "random_product",
            CocycleSpec::Lorenz63 { .. } => "lorenz63",
        }
    }

    pub fn build(&self) -> Result<DynCocycle> {
        let wrap = |e: clv_core::Error| HarnessError::field("cocycle", e.to_string());
        Ok(match self {
            CocycleSpec::Diagonal { lambdas, domain } => {
                Box::new(diagonal_cocycle(lambdas, domain.build()?).map_err(wrap)?)
            }
            CocycleSpec::Rotating { lambda1, lambda2, domain } => {
                Box::new(rotating_cocycle(*lambda1, *lambda2, domain.build()?).map_err(wrap)?)
            }
            CocycleSpec::DegenerateRotating { lambda1, rot_speed, lambda2, domain } => {
                Box::new(degenerate_rotating_cocycle(*lambda1, *rot_speed, *lambda2, domain.build()?).map_err(wrap)?)
            }
            CocycleSpec::RandomProduct { dim, seed, distribution } => {
                let dist = match distribution {
                    DistributionSpec::Gaussian => EntryDistribution::Gaussian,
                    DistributionSpec::Uniform => EntryDistribution::Uniform,
                };
                Box::new(random_product_cocycle(*dim, *seed, dist).map_err(wrap)?)
            }
            CocycleSpec::Lorenz63 { sigma, rho, beta, step, transient } => {
                let params = Lorenz63Params { sigma: *sigma, rho: *rho, beta: *beta, step: *step, transient: *transient };
                Box::new(lorenz63(params).map_err(wrap)?)
            }
        })
    }
}

/// Ginelli run parameters. `pattern` defaults to the simple pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GinelliSpec {
    pub t1: f64,
    pub t2: f64,
    #[serde(default = "defaults::ortho_interval")]
    pub ortho_interval: f64,
    #[serde(default)]
    pub pattern: Option<Vec<usize>>,
    #[serde(default)]
    pub interval: Vec<f64>,
    #[serde(default)]
    pub grouping_tol: Option<f64>,
}

/// Runtime grid: either the diagonal `t1 = t2` over `times`, or the full
/// product of `t1` and `t2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default)]
    pub t1: Vec<f64>,
    #[serde(default)]
    pub t2: Vec<f64>,
}

impl GridSpec {
    pub fn cells(&self) -> Result<Vec<(f64, f64)>> {
        match (self.times.is_empty(), self.t1.is_empty() && self.t2.is_empty()) {
            (false, true) => Ok(self.times.iter().map(|&t| (t, t)).collect()),
            (true, false) if !self.t1.is_empty() && !self.t2.is_empty() => {
                Ok(self.t1.iter().flat_map(|&a| self.t2.iter().map(move |&b| (a, b))).collect())
            }
            _ => Err(HarnessError::field("grid", "give either `times` or both `t1` and `t2`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmissibilitySpec {
    pub dim: usize,
    #[serde(default = "defaults::radius")]
    pub radius: f64,
    #[serde(default)]
    pub pattern: Option<Vec<usize>>,
    pub deltas: Vec<f64>,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    #[serde(default)]
    pub extendable: bool,
    /// Upper bound on the fraction at the smallest δ, checked when present.
    #[serde(default)]
    pub final_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub cocycle: Option<CocycleSpec>,
    #[serde(default)]
    pub omega0: f64,
    #[serde(default)]
    pub ginelli: Option<GinelliSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub admissibility: Option<AdmissibilitySpec>,
    /// Tolerance for the experiment's pass/fail checks; each experiment has its own default.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default = "defaults::output")]
    pub output: String,
    #[serde(default)]
    pub format: Format,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(HarnessError::from_parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !crate::experiments::is_registered(&self.experiment) {
            return Err(HarnessError::UnknownExperiment {
                name: self.experiment.clone(),
                available: crate::experiments::names().join(", "),
            });
        }
        if self.trials == 0 {
            return Err(HarnessError::field("trials", "must be at least 1"));
        }
        if !self.omega0.is_finite() {
            return Err(HarnessError::field("omega0", "must be finite"));
        }
        if let Some(g) = &self.ginelli {
            for (name, v) in [("ginelli.t1", g.t1), ("ginelli.t2", g.t2), ("ginelli.ortho_interval", g.ortho_interval)] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(HarnessError::field(name, format!("must be positive, got {v}")));
                }
            }
        }
        if let Some(grid) = &self.grid {
            let cells = grid.cells()?;
            if cells.iter().any(|&(a, b)| !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite())) {
                return Err(HarnessError::field("grid", "runtimes must be positive"));
            }
        }
        if let Some(a) = &self.admissibility {
            if a.dim < 2 {
                return Err(HarnessError::field("admissibility.dim", "must be at least 2"));
            }
            if a.samples < 1000 {
                return Err(HarnessError::field("admissibility.samples", "must be at least 1000"));
            }
            if a.deltas.is_empty() || a.deltas.iter().any(|d| !(0.0..=1.0).contains(d)) {
                return Err(HarnessError::field("admissibility.deltas", "need a nonempty list in [0, 1]"));
            }
        }
        if self.output.is_empty() {
            return Err(HarnessError::field("output", "must not be empty"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization: defaults filled in, fixed key
    /// order, and the output location and format left out since they do not
    /// affect results.
    pub fn hash(&self) -> String {
        let neutral = Self { output: String::new(), format: Format::default(), ..self.clone() };
        let canonical = serde_json::to_string(&neutral).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn output_path(&self, suffix: &str) -> PathBuf {
        PathBuf::from(format!("{}_{suffix}.{}", self.output, self.format.extension()))
    }

    pub fn require_cocycle(&self) -> Result<&CocycleSpec> {
        self.cocycle.as_ref().ok_or_else(|| HarnessError::field("cocycle", "required by this experiment"))
    }

    pub fn require_ginelli(&self) -> Result<&GinelliSpec> {
        self.ginelli.as_ref().ok_or_else(|| HarnessError::field("ginelli", "required by this experiment"))
    }
}

/// A pattern from an optional list of sizes, defaulting to all ones.
pub fn pattern_or_simple(sizes: &Option<Vec<usize>>, dim: usize, field: &str) -> Result<DegeneracyPattern> {
    let pattern = match sizes {
        Some(s) => DegeneracyPattern::new(s.clone()).map_err(|e| HarnessError::field(field, e.to_string()))?,
        None => DegeneracyPattern::simple(dim),
    };
    pattern.check_total(dim).map_err(|e| HarnessError::field(field, e.to_string()))?;
    Ok(pattern)
}
