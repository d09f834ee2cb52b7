//! Trial execution, summaries and output files.
//!
//! Trial `i` runs with seed `base_seed + i`. Trials run on a rayon pool but
//! results are always returned and written in trial order.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use cpe_core::baseline::{mle_budget, run_mle};
use cpe_core::complexity::{self, fixed_budget_h_tilde, gap_profile};
use cpe_core::fixed_budget::{run_fixed_budget, FixedBudgetOptions};
use cpe_core::fixed_confidence::{run_fixed_confidence, FixedConfidenceOptions};
use cpe_core::refined::{run_refined, RefinedOptions};
use cpe_core::{BanditEnv, DecisionClass, Hypothesis, MeanVector, RunReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgorithmSpec, ExperimentConfig};
use crate::error::{BenchError, Result};

/// A class, its true means and the optimal hypothesis.
#[derive(Clone, Debug)]
pub struct Instance {
    pub class: DecisionClass,
    pub mu: MeanVector,
    pub star: Hypothesis,
}

impl Instance {
    pub fn new(class: DecisionClass, mu: MeanVector) -> Result<Self> {
        let star = match gap_profile(&class, &mu) {
            Ok(profile) => profile.star,
            Err(cpe_core::CpeError::TooLarge { .. }) => class.oracle(&mu)?,
            Err(e) => return Err(e.into()),
        };
        Ok(Self { class, mu, star })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let class = cfg.build_class()?;
        let mu = cfg.build_mu(&class)?;
        Self::new(class, mu)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub correct: bool,
    pub wall_time_ms: f64,
    pub report: RunReport,
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    base.wrapping_add(trial as u64)
}

pub fn run_trial(cfg: &ExperimentConfig, instance: &Instance, trial: usize) -> Result<TrialOutcome> {
    let seed = trial_seed(cfg.seed, trial);
    let mut env = BanditEnv::new(instance.mu.clone(), cfg.noise, seed)?;
    let class = &instance.class;
    let traces = cfg.output.traces;
    let start = Instant::now();
    let report = match &cfg.algorithm {
        AlgorithmSpec::FixedConfidence { failure_prob, max_rounds, phi_source } => {
            let opts = FixedConfidenceOptions { max_rounds: *max_rounds, phi_source: *phi_source, record_trace: traces };
            run_fixed_confidence(class, &mut env, *failure_prob, &cfg.disagreement, &opts)?
        }
        AlgorithmSpec::FixedBudget { budget } => {
            run_fixed_budget(class, &mut env, *budget, &FixedBudgetOptions { record_trace: traces })?
        }
        AlgorithmSpec::Refined { failure_prob, max_rounds } => {
            run_refined(class, &mut env, *failure_prob, &RefinedOptions { max_rounds: *max_rounds, record_trace: traces })?
        }
        AlgorithmSpec::Mle { budget, failure_prob } => {
            let budget = match (budget, failure_prob) {
                (Some(b), _) => *b,
                (None, Some(p)) => mle_budget(class, &instance.mu, *p)?,
                (None, None) => unreachable!("validated config"),
            };
            run_mle(class, &mut env, budget)?
        }
    };
    let wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(TrialOutcome { trial, seed, correct: report.is_correct(&instance.star), wall_time_ms, report })
}

/// Runs every trial of `cfg` on `workers` threads (0 = one per core).
pub fn run_trials(cfg: &ExperimentConfig, instance: &Instance, workers: usize) -> Result<Vec<TrialOutcome>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, instance, i)).collect())
}

/// Instance measures reported next to every summary. Fields are `None`
/// when the class is too large to enumerate.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeasures {
    pub psi: Option<usize>,
    pub phi: Option<f64>,
    pub diameter: Option<usize>,
    pub min_gap: Option<f64>,
    pub h: Option<f64>,
    pub h_tilde: Option<f64>,
}

impl InstanceMeasures {
    pub fn of(instance: &Instance) -> Self {
        let class = &instance.class;
        let profile = gap_profile(class, &instance.mu).ok();
        Self {
            psi: complexity::psi(class).ok(),
            phi: complexity::phi(class).ok(),
            diameter: complexity::diameter(class).ok(),
            min_gap: profile.as_ref().and_then(|p| p.min_gap()),
            h: profile.as_ref().map(|p| p.h_sum()),
            h_tilde: profile.as_ref().and_then(|p| fixed_budget_h_tilde(&p.defined_arm_gaps()).ok()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub algorithm: String,
    pub class: String,
    pub arms: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub success_rate: f64,
    pub incomplete_runs: usize,
    pub mean_total_queries: f64,
    pub max_total_queries: u64,
    pub mean_rounds: f64,
    pub mean_oracle_calls: f64,
    pub per_arm_query_means: Vec<f64>,
    pub measures: InstanceMeasures,
}

impl Summary {
    pub fn new(label: &str, cfg: &ExperimentConfig, instance: &Instance, outcomes: &[TrialOutcome]) -> Self {
        let n = outcomes.len().max(1) as f64;
        let k = instance.class.arms();
        let mut per_arm = vec![0.0; k];
        for o in outcomes {
            for (m, q) in per_arm.iter_mut().zip(&o.report.per_arm_queries) {
                *m += *q as f64 / n;
            }
        }
        let mean = |f: &dyn Fn(&TrialOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
        Self {
            label: label.to_string(),
            algorithm: cfg.algorithm.label().to_string(),
            class: instance.class.name().to_string(),
            arms: k,
            trials: outcomes.len(),
            base_seed: cfg.seed,
            success_rate: mean(&|o| o.correct as u8 as f64),
            incomplete_runs: outcomes.iter().filter(|o| !o.report.completed).count(),
            mean_total_queries: mean(&|o| o.report.total_queries as f64),
            max_total_queries: outcomes.iter().map(|o| o.report.total_queries).max().unwrap_or(0),
            mean_rounds: mean(&|o| o.report.rounds as f64),
            mean_oracle_calls: mean(&|o| o.report.oracle_calls as f64),
            per_arm_query_means: per_arm,
            measures: InstanceMeasures::of(instance),
        }
    }
}

pub const SUMMARY_COLUMNS: [&str; 19] = [
    "label",
    "algorithm",
    "class",
    "arms",
    "trials",
    "base_seed",
    "success_rate",
    "incomplete_runs",
    "mean_total_queries",
    "max_total_queries",
    "mean_rounds",
    "mean_oracle_calls",
    "per_arm_query_means",
    "psi",
    "phi",
    "diameter",
    "min_gap",
    "h",
    "h_tilde",
];

pub const TRIAL_COLUMNS: [&str; 9] =
    ["trial", "seed", "correct", "completed", "total_queries", "rounds", "oracle_calls", "per_arm_queries", "wall_time_ms"];

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn joined<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn summary_record(s: &Summary) -> Vec<String> {
    let m = &s.measures;
    vec![
        s.label.clone(),
        s.algorithm.clone(),
        s.class.clone(),
        s.arms.to_string(),
        s.trials.to_string(),
        s.base_seed.to_string(),
        s.success_rate.to_string(),
        s.incomplete_runs.to_string(),
        s.mean_total_queries.to_string(),
        s.max_total_queries.to_string(),
        s.mean_rounds.to_string(),
        s.mean_oracle_calls.to_string(),
        joined(&s.per_arm_query_means),
        opt(m.psi),
        opt(m.phi),
        opt(m.diameter),
        opt(m.min_gap),
        opt(m.h),
        opt(m.h_tilde),
    ]
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e })
}

pub fn write_summaries(path: &Path, summaries: &[Summary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summaries {
        w.write_record(summary_record(s))?;
    }
    w.flush().map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

pub fn write_trials(path: &Path, outcomes: &[TrialOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(TRIAL_COLUMNS)?;
    for o in outcomes {
        let r = &o.report;
        w.write_record([
            o.trial.to_string(),
            o.seed.to_string(),
            o.correct.to_string(),
            r.completed.to_string(),
            r.total_queries.to_string(),
            r.rounds.to_string(),
            r.oracle_calls.to_string(),
            joined(&r.per_arm_queries),
            format!("{:.3}", o.wall_time_ms),
        ])?;
    }
    w.flush().map_err(|e| BenchError::Io { path: path.to_path_buf(), source: e })?;
    Ok(())
}

/// One JSON object per line: every trace event tagged with its trial, then a
/// closing `result` line per trial.
pub fn write_traces(path: &Path, outcomes: &[TrialOutcome]) -> Result<()> {
    let io = |e| BenchError::Io { path: path.to_path_buf(), source: e };
    let mut w = BufWriter::new(create(path)?);
    for o in outcomes {
        for event in &o.report.trace {
            let line = serde_json::json!({ "trial": o.trial, "seed": o.seed, "event": event });
            writeln!(w, "{line}").map_err(io)?;
        }
        let mut report = o.report.clone();
        report.trace.clear();
        let line = serde_json::json!({ "trial": o.trial, "seed": o.seed, "correct": o.correct, "result": report });
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::Io { path: dir.to_path_buf(), source: e })
}

/// Runs `cfg` and, when `out` is given, writes `summary.csv`, `trials.csv`
/// and `traces.jsonl` there.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<Summary> {
    let instance = Instance::from_config(cfg)?;
    let outcomes = run_trials(cfg, &instance, workers)?;
    let summary = Summary::new(&cfg.name, cfg, &instance, &outcomes);
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_summaries(&dir.join("summary.csv"), std::slice::from_ref(&summary))?;
        write_trials(&dir.join("trials.csv"), &outcomes)?;
        write_traces(&dir.join("traces.jsonl"), &outcomes)?;
    }
    Ok(summary)
}

/// Cartesian product of the config's `[sweep]` grid, as labelled configs.
pub fn sweep_points(cfg: &ExperimentConfig) -> Result<Vec<(String, ExperimentConfig)>> {
    let mut base = toml::Value::try_from(cfg).map_err(|e| BenchError::Config { field: "sweep".into(), reason: e.to_string() })?;
    if let Some(t) = base.as_table_mut() {
        t.remove("sweep");
    }
    let mut points: Vec<(Vec<String>, toml::Value)> = vec![(Vec::new(), base)];
    for (path, values) in &cfg.sweep {
        if values.is_empty() {
            return Err(BenchError::Config { field: format!("sweep.{path}"), reason: "no values".into() });
        }
        let mut next = Vec::with_capacity(points.len() * values.len());
        for (labels, point) in &points {
            for value in values {
                let mut p = point.clone();
                crate::config::set_path(&mut p, path, value.clone())?;
                let mut l = labels.clone();
                l.push(format!("{path}={value}"));
                next.push((l, p));
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|(labels, value)| {
            let label = if labels.is_empty() { cfg.name.clone() } else { format!("{} {}", cfg.name, labels.join(" ")) };
            Ok((label, ExperimentConfig::from_value(value)?))
        })
        .collect()
}

/// Runs every sweep point; writes one summary row per point plus per-point
/// trial files under `point-<i>/`.
pub fn run_sweep(cfg: &ExperimentConfig, workers: usize, out: Option<&Path>) -> Result<Vec<Summary>> {
    let mut summaries = Vec::new();
    for (i, (label, point)) in sweep_points(cfg)?.into_iter().enumerate() {
        let instance = Instance::from_config(&point)?;
        let outcomes = run_trials(&point, &instance, workers)?;
        if let Some(dir) = out {
            let sub = dir.join(format!("point-{i}"));
            ensure_dir(&sub)?;
            write_trials(&sub.join("trials.csv"), &outcomes)?;
            write_traces(&sub.join("traces.jsonl"), &outcomes)?;
        }
        summaries.push(Summary::new(&label, &point, &instance, &outcomes));
    }
    if let Some(dir) = out {
        ensure_dir(dir)?;
        write_summaries(&dir.join("summary.csv"), &summaries)?;
    }
    Ok(summaries)
}
