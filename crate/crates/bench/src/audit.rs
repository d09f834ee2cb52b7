//! Monte Carlo audits of the concentration and regret inequalities.

use cpe_core::baseline::audit_lemma1;
use cpe_core::complexity::{self, gap_profile};
use cpe_core::disagreement::{DisagreementConfig, FtplLearner};
use cpe_core::fixed_confidence::{concentration_radius, run_fixed_confidence, FixedConfidenceOptions, PhiSource};
use cpe_core::{BanditEnv, DecisionClass, Hypothesis, MeanVector, Noise, RunReport, TraceEvent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::harness::{trial_seed, Instance};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub audit: String,
    pub trials: usize,
    /// Violation rate for the concentration audits, mean regret for `ftpl-regret`.
    pub observed: f64,
    pub bound: f64,
    pub passed: bool,
    pub seed: u64,
}

pub fn lemma1(instance: &Instance, noise: Noise, budget: u64, failure_prob: f64, trials: usize, seed: u64) -> Result<AuditReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rate = audit_lemma1(&instance.class, &instance.mu, noise, budget, failure_prob, trials, &mut rng)?;
    Ok(AuditReport { audit: "lemma1".into(), trials, observed: rate, bound: failure_prob, passed: rate <= failure_prob, seed })
}

/// Per-round conditional means of a traced fixed-confidence run: the true
/// mean on queried arms, the hallucinated value elsewhere. Round 0 queries
/// every arm.
pub fn conditional_means(report: &RunReport, mu: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
    report
        .trace
        .iter()
        .filter_map(|event| match event {
            TraceEvent::FixedConfidenceRound { queried, y, .. } => {
                let bar = queried.iter().zip(y).zip(mu).map(|((&q, &y), &m)| if q { m } else { y }).collect();
                Some((bar, y.clone()))
            }
            _ => None,
        })
        .collect()
}

/// Whether `|(1/t) Σ_{i<t} ⟨v⋆ − v, μ̄_i − y_i⟩| ≤ d(v⋆, v) Δ_t` holds for
/// every member `v` and every round `t` of the run.
pub fn martingale_holds(
    rounds: &[(Vec<f64>, Vec<f64>)],
    star: &Hypothesis,
    members: &[Hypothesis],
    schedule: impl Fn(u64) -> f64,
) -> Result<bool> {
    let k = star.arms();
    let mut z = vec![0.0; k];
    for (t, (bar, y)) in rounds.iter().enumerate() {
        for a in 0..k {
            z[a] += bar[a] - y[a];
        }
        let t = t as u64 + 1;
        let delta_t = schedule(t);
        let star_z = star.value(&z)?;
        for v in members {
            let d = star.distance(v)?;
            if d > 0 && ((star_z - v.value(&z)?) / t as f64).abs() > d as f64 * delta_t {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Runs traced fixed-confidence trials and counts runs in which the uniform
/// martingale inequality fails at some round. The bound is `δ/2`.
#[allow(clippy::too_many_arguments)]
pub fn lemma3(
    instance: &Instance,
    noise: Noise,
    failure_prob: f64,
    dis_config: &DisagreementConfig,
    phi_source: PhiSource,
    max_rounds: u64,
    trials: usize,
    seed: u64,
) -> Result<AuditReport> {
    let class = &instance.class;
    let k = class.arms();
    let members = class.enumerate()?;
    let psi = complexity::psi(class)? as f64;
    let phi = match phi_source {
        PhiSource::Exact => complexity::phi(class)?,
        PhiSource::LogK => (k as f64).ln(),
    };
    let opts = FixedConfidenceOptions { max_rounds, phi_source, record_trace: true };
    let violations: Result<Vec<bool>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut env = BanditEnv::new(instance.mu.clone(), noise, trial_seed(seed, i))?;
            let report = run_fixed_confidence(class, &mut env, failure_prob, dis_config, &opts)?;
            let rounds = conditional_means(&report, &instance.mu);
            Ok(!martingale_holds(&rounds, &instance.star, members, |t| concentration_radius(t, phi, psi, k, failure_prob))?)
        })
        .collect();
    let rate = violations?.iter().filter(|&&v| v).count() as f64 / trials as f64;
    let bound = failure_prob / 2.0;
    Ok(AuditReport { audit: "lemma3".into(), trials, observed: rate, bound, passed: rate <= bound, seed })
}

/// Learning rate used by the regret audit: `√(1/(25KT log(2K/δ)))`.
pub fn ftpl_audit_epsilon(arms: usize, rounds: u64, failure_prob: f64) -> f64 {
    let k = arms as f64;
    (1.0 / (25.0 * k * rounds as f64 * (2.0 * k / failure_prob).ln())).sqrt()
}

/// `2√(DRAT)` with `D = K` and `R = A = 5K√(log(2K/δ))`.
pub fn ftpl_regret_bound(arms: usize, rounds: u64, failure_prob: f64) -> f64 {
    let k = arms as f64;
    let r = 5.0 * k * (2.0 * k / failure_prob).ln().sqrt();
    2.0 * (k * r * r * rounds as f64).sqrt()
}

/// Realized regret of one learner run against an adaptive adversary that
/// charges `+1` on the arms of the current unperturbed leader and `−1`
/// everywhere else.
pub fn ftpl_regret_run(class: &DecisionClass, rounds: u64, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut learner = FtplLearner::new(class, epsilon)?;
    let mut incurred = 0.0;
    for _ in 0..rounds {
        let neg: Vec<f64> = learner.cumulative_loss().iter().map(|l| -l).collect();
        let leader = class.oracle(&neg)?;
        let loss: Vec<f64> = leader.bits().iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
        let played = learner.play(rng);
        incurred += played.value(&loss)?;
        learner.update(&loss)?;
    }
    let neg: Vec<f64> = learner.cumulative_loss().iter().map(|l| -l).collect();
    let best = class.oracle(&neg)?.value(learner.cumulative_loss())?;
    Ok(incurred - best)
}

pub fn ftpl_regret(class: &DecisionClass, rounds: u64, failure_prob: f64, runs: usize, seed: u64) -> Result<AuditReport> {
    if rounds == 0 || runs == 0 {
        return Err(BenchError::Config { field: "audit".into(), reason: "rounds and runs must be at least 1".into() });
    }
    let epsilon = ftpl_audit_epsilon(class.arms(), rounds, failure_prob);
    let regrets: Result<Vec<f64>> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
            ftpl_regret_run(class, rounds, epsilon, &mut rng)
        })
        .collect();
    let mean = regrets?.iter().sum::<f64>() / runs as f64;
    let bound = ftpl_regret_bound(class.arms(), rounds, failure_prob);
    Ok(AuditReport { audit: "ftpl-regret".into(), trials: runs, observed: mean, bound, passed: mean <= bound, seed })
}

/// Structured complexity report for the `complexity` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub class: String,
    pub arms: usize,
    pub cardinality: u128,
    pub psi: usize,
    pub phi: f64,
    pub diameter: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub mu: Vec<f64>,
    pub star: Hypothesis,
    pub hypothesis_gaps: Vec<(Hypothesis, f64)>,
    pub arm_gaps: Vec<Option<f64>>,
    pub h: f64,
    pub h_tilde: Option<f64>,
    pub refined: Vec<Option<(f64, f64)>>,
    pub unnormalized_gaps: Vec<Option<f64>>,
    pub complement_gaps: Vec<Option<f64>>,
}

pub fn complexity_report(class: &DecisionClass, mu: Option<&MeanVector>) -> Result<ComplexityReport> {
    let geometry = complexity::geometry(class)?;
    let instance = match mu {
        None => None,
        Some(mu) => {
            let profile = gap_profile(class, mu)?;
            let prior = complexity::prior_gap_profile(class, mu)?;
            Some(InstanceReport {
                mu: mu.to_vec(),
                h: profile.h_sum(),
                h_tilde: complexity::fixed_budget_h_tilde(&profile.defined_arm_gaps()).ok(),
                refined: complexity::refined_profile(class, mu)?,
                star: profile.star,
                hypothesis_gaps: profile.hypothesis_gaps,
                arm_gaps: profile.arm_gaps,
                unnormalized_gaps: prior.unnormalized,
                complement_gaps: prior.complement,
            })
        }
    };
    Ok(ComplexityReport {
        class: class.name().to_string(),
        arms: class.arms(),
        cardinality: geometry.cardinality,
        psi: geometry.psi,
        phi: geometry.phi,
        diameter: geometry.diameter,
        instance,
    })
}
