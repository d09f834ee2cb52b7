//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "disj-homogeneous"
//! trials = 100
//! seed = 7
//!
//! [class]
//! kind = "disj_set"
//! arms = 12
//! size = 3
//!
//! [mu.homogeneous]
//! star = "analytic-first"
//! gap = 0.6
//!
//! [noise]
//! kind = "gaussian"
//!
//! [algorithm]
//! name = "fixed-confidence"
//! failure_prob = 0.1
//!
//! [disagreement]
//! backend = "brute_force"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cpe_core::disagreement::DisagreementConfig;
use cpe_core::fixed_confidence::{PhiSource, DEFAULT_MAX_ROUNDS};
use cpe_core::{ClassKind, DecisionClass, Hypothesis, MeanVector, Noise};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub class: ClassKind,
    pub mu: MuSpec,
    #[serde(default)]
    pub noise: Noise,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub disagreement: DisagreementConfig,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    /// Grid for the `sweep` subcommand: dotted config path ↦ values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sweep: BTreeMap<String, Vec<toml::Value>>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_trials() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    Explicit(Vec<f64>),
    /// `μ = Δ(2v⋆ − 1)`.
    Homogeneous { star: StarSpec, gap: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StarSpec {
    /// Position in the lexicographic enumeration of the class.
    Index(usize),
    /// `"analytic-first"`: the member preferred by weights `1/(a + 1)`,
    /// found by the oracle without enumerating.
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    FixedConfidence {
        failure_prob: f64,
        #[serde(default = "default_max_rounds")]
        max_rounds: u64,
        #[serde(default)]
        phi_source: PhiSource,
    },
    FixedBudget {
        budget: u64,
    },
    Refined {
        failure_prob: f64,
        #[serde(default = "default_max_rounds")]
        max_rounds: u64,
    },
    /// Uses `budget` when given, otherwise the budget derived from `failure_prob`.
    Mle {
        budget: Option<u64>,
        failure_prob: Option<f64>,
    },
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_ROUNDS
}

impl AlgorithmSpec {
    pub fn label(&self) -> &'static str {
        match self {
            AlgorithmSpec::FixedConfidence { .. } => "fixed-confidence",
            AlgorithmSpec::FixedBudget { .. } => "fixed-budget",
            AlgorithmSpec::Refined { .. } => "refined",
            AlgorithmSpec::Mle { .. } => "mle",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Record per-round trace events in the JSONL output.
    pub traces: bool,
}

fn invalid(field: &str, reason: impl Into<String>) -> BenchError {
    BenchError::Config { field: field.into(), reason: reason.into() }
}

fn check_prob(field: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("{p} is outside (0, 1)")))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(value: toml::Value) -> Result<Self> {
        let cfg: Self = value.try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        match &self.algorithm {
            AlgorithmSpec::FixedConfidence { failure_prob, max_rounds, .. }
            | AlgorithmSpec::Refined { failure_prob, max_rounds } => {
                check_prob("algorithm.failure_prob", *failure_prob)?;
                if *max_rounds == 0 {
                    return Err(invalid("algorithm.max_rounds", "must be at least 1"));
                }
            }
            AlgorithmSpec::FixedBudget { .. } => {}
            AlgorithmSpec::Mle { budget, failure_prob } => {
                if let Some(p) = failure_prob {
                    check_prob("algorithm.failure_prob", *p)?;
                }
                if budget.is_none() && failure_prob.is_none() {
                    return Err(invalid("algorithm.budget", "give either a budget or a failure_prob"));
                }
            }
        }
        self.disagreement.validate().map_err(|e| invalid("disagreement", e.to_string()))?;
        match &self.mu {
            MuSpec::Explicit(values) => {
                if let Some(pos) = values.iter().position(|x| !(-1.0..=1.0).contains(x)) {
                    return Err(invalid("mu.explicit", format!("entry {pos} = {} is outside [-1, 1]", values[pos])));
                }
            }
            MuSpec::Homogeneous { star, gap } => {
                if !(0.0..=1.0).contains(gap) {
                    return Err(invalid("mu.homogeneous.gap", format!("{gap} is outside [0, 1]")));
                }
                if let StarSpec::Named(name) = star {
                    if name != "analytic-first" {
                        return Err(invalid("mu.homogeneous.star", format!("unknown star `{name}`")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn build_class(&self) -> Result<DecisionClass> {
        DecisionClass::new(self.class.clone()).map_err(|e| invalid("class", e.to_string()))
    }

    pub fn build_mu(&self, class: &DecisionClass) -> Result<MeanVector> {
        build_mu(&self.mu, class)
    }
}

pub fn build_mu(spec: &MuSpec, class: &DecisionClass) -> Result<MeanVector> {
    let mu = match spec {
        MuSpec::Explicit(values) => {
            if values.len() != class.arms() {
                return Err(invalid(
                    "mu.explicit",
                    format!("has {} entries, the class has {} arms", values.len(), class.arms()),
                ));
            }
            MeanVector::true_means(values.clone())
        }
        MuSpec::Homogeneous { star, gap } => {
            let star = resolve_star(star, class)?;
            MeanVector::homogeneous(&star, *gap)
        }
    };
    mu.map_err(|e| invalid("mu", e.to_string()))
}

fn resolve_star(star: &StarSpec, class: &DecisionClass) -> Result<Hypothesis> {
    match star {
        StarSpec::Index(i) => {
            let members = class.enumerate().map_err(|e| invalid("mu.homogeneous.star", e.to_string()))?;
            members.get(*i).cloned().ok_or_else(|| {
                invalid("mu.homogeneous.star", format!("index {i} out of range for {} members", members.len()))
            })
        }
        StarSpec::Named(_) => {
            let weights: Vec<f64> = (0..class.arms()).map(|a| 1.0 / (a + 1) as f64).collect();
            class.maximize(&weights).map_err(|e| invalid("mu.homogeneous.star", e.to_string()))
        }
    }
}

/// Replaces the value at a dotted path, creating intermediate tables.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| invalid(path, "path crosses a non-table value"))?;
        if i + 1 == parts.len() {
            table.insert((*part).to_string(), value);
            return Ok(());
        }
        node = table.entry((*part).to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
    }
    Err(invalid(path, "empty path"))
}
