//! Disagreement-based fixed-confidence identification.
//!
//! Every round recomputes the empirical best hypothesis `v̂_t` and asks, arm
//! by arm, whether a point of the `Δ_t`-version space assigns the opposite
//! membership. Disagreeing arms are sampled; for the others the round records
//! the hallucinated value `2v̂_t(a) − 1`. The run stops at the first round
//! without a real query.

use std::f64::consts::PI;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classes::DecisionClass;
use crate::complexity;
use crate::disagreement::{disagree, DisagreementConfig};
use crate::env::BanditEnv;
use crate::error::{check_len, CpeError, Result};
use crate::report::{RunReport, TraceEvent};

pub const DEFAULT_MAX_ROUNDS: u64 = 1_000_000;
/// Stream index of the algorithm's own RNG, disjoint from the per-arm streams.
const INTERNAL_STREAM: u64 = 1 << 40;

/// `Δ_t = min{1, √((8/t)(ΦΨ + log(Kπ²t²/δ))/Ψ)}`.
pub fn delta_schedule(t: u64, phi: f64, psi: f64, arms: usize, failure_prob: f64) -> f64 {
    concentration_radius(t, phi, psi, arms, failure_prob).min(1.0)
}

/// The schedule before clipping at 1; the uniform martingale bound holds at
/// this radius.
pub fn concentration_radius(t: u64, phi: f64, psi: f64, arms: usize, failure_prob: f64) -> f64 {
    let t = t as f64;
    ((8.0 / t) * (phi * psi + (arms as f64 * PI * PI * t * t / failure_prob).ln()) / psi).sqrt()
}

/// Theorem-level cap on the real queries of an arm with gap `Δ_a`:
/// `144/Δ_a² (Φ + (2 log(144/(Δ_a²Ψ)) + 2 log(Kπ²/δ))/Ψ)`.
pub fn per_arm_sample_cap(arm_gap: f64, phi: f64, psi: f64, arms: usize, failure_prob: f64) -> f64 {
    let g2 = arm_gap * arm_gap;
    let logs = 2.0 * (144.0 / (g2 * psi)).ln() + 2.0 * (arms as f64 * PI * PI / failure_prob).ln();
    144.0 / g2 * (phi + logs / psi)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiSource {
    /// Exact `Φ` from the complexity module.
    #[default]
    Exact,
    /// The upper bound `Φ ≤ log K`.
    LogK,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedConfidenceOptions {
    pub max_rounds: u64,
    pub phi_source: PhiSource,
    pub record_trace: bool,
}

impl Default for FixedConfidenceOptions {
    fn default() -> Self {
        Self { max_rounds: DEFAULT_MAX_ROUNDS, phi_source: PhiSource::Exact, record_trace: false }
    }
}

pub fn run_fixed_confidence(
    class: &DecisionClass,
    env: &mut BanditEnv,
    failure_prob: f64,
    dis_config: &DisagreementConfig,
    options: &FixedConfidenceOptions,
) -> Result<RunReport> {
    check_len(class.arms(), env.arms())?;
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(CpeError::Domain(format!("failure probability {failure_prob} is outside (0, 1)")));
    }
    dis_config.validate()?;
    if options.max_rounds == 0 {
        return Err(CpeError::InvalidConfig { field: "max_rounds".into(), reason: "must be at least 1".into() });
    }
    let k = class.arms();
    let psi = complexity::psi(class)? as f64;
    let phi = match options.phi_source {
        PhiSource::Exact => complexity::phi(class)?,
        PhiSource::LogK => (k as f64).ln(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(env.seed());
    rng.set_stream(INTERNAL_STREAM);

    let start_counts = env.query_counts().to_vec();
    let mut trace = Vec::new();
    let mut oracle_calls = 0u64;

    let mut sum_y = Vec::with_capacity(k);
    for a in 0..k {
        sum_y.push(env.pull(a)?);
    }
    if options.record_trace {
        trace.push(TraceEvent::FixedConfidenceRound {
            t: 0,
            delta_t: 1.0,
            v_hat: class.maximize(&sum_y)?,
            queried: vec![true; k],
            y: sum_y.clone(),
            oracle_calls: 1,
        });
    }

    let mut t = 1u64;
    loop {
        let mu_hat: Vec<f64> = sum_y.iter().map(|s| s / t as f64).collect();
        let delta_t = delta_schedule(t, phi, psi, k, failure_prob);
        let v_hat = class.maximize(&mu_hat)?;
        oracle_calls += 1;
        let round_prob = failure_prob / ((t * t) as f64 * PI * PI);
        let mut queried = vec![false; k];
        let mut y = vec![0.0; k];
        let mut round_calls = 1;
        for a in 0..k {
            let inside = v_hat.bits()[a];
            let verdict = disagree(class, a, 1 - inside, delta_t, &mu_hat, round_prob, dis_config, &mut rng)?;
            round_calls += verdict.oracle_calls;
            if verdict.feasible {
                queried[a] = true;
                y[a] = env.pull(a)?;
            } else {
                y[a] = 2.0 * inside as f64 - 1.0;
            }
        }
        oracle_calls += round_calls - 1;
        let any_query = queried.iter().any(|&q| q);
        for (s, v) in sum_y.iter_mut().zip(&y) {
            *s += v;
        }
        if options.record_trace {
            trace.push(TraceEvent::FixedConfidenceRound {
                t,
                delta_t,
                v_hat: v_hat.clone(),
                queried,
                y,
                oracle_calls: round_calls,
            });
        }
        let completed = !any_query;
        if completed || t >= options.max_rounds {
            let per_arm: Vec<u64> = env.query_counts().iter().zip(&start_counts).map(|(n, s)| n - s).collect();
            return Ok(RunReport {
                algorithm: "fixed-confidence".into(),
                answer: v_hat,
                total_queries: per_arm.iter().sum(),
                per_arm_queries: per_arm,
                rounds: t,
                oracle_calls,
                completed,
                seed: env.seed(),
                trace,
            });
        }
        t += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Hypothesis, MeanVector};

    #[test]
    fn schedule_examples() {
        let d = delta_schedule(1000, 0.1733, 4.0, 6, 0.1);
        let oracle = ((8.0 / 1000.0) * (0.1733 * 4.0 + (6.0 * PI * PI * 1e6 / 0.1f64).ln()) / 4.0).sqrt();
        assert!((d - oracle).abs() < 1e-12);
        assert!((d - 0.2044).abs() < 1e-3, "{d}");
        assert_eq!(delta_schedule(1, 0.0, 2.0, 2, 0.1), 1.0);
        assert!(concentration_radius(1, 0.0, 2.0, 2, 0.1) > 1.0);
        assert_eq!(concentration_radius(1000, 0.1733, 4.0, 6, 0.1), d);
        let grid: Vec<f64> = (3..5000).map(|t| delta_schedule(t, 0.2, 3.0, 8, 0.05)).collect();
        assert!(grid.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn noiseless_disj_set() {
        let class = DecisionClass::disj_set(4, 2).unwrap();
        let mu = MeanVector::true_means(vec![0.5, 0.5, -0.5, -0.5]).unwrap();
        let mut env = BanditEnv::noiseless(mu);
        let opts = FixedConfidenceOptions { record_trace: true, ..Default::default() };
        let report = run_fixed_confidence(&class, &mut env, 0.1, &DisagreementConfig::brute_force(), &opts).unwrap();
        assert!(report.completed);
        assert_eq!(report.answer, Hypothesis::new(vec![1, 1, 0, 0]).unwrap());
        let psi = complexity::psi(&class).unwrap() as f64;
        let phi = complexity::phi(&class).unwrap();
        let crossing = (1..).find(|&t| delta_schedule(t, phi, psi, 4, 0.1) < 0.5).unwrap();
        assert!(report.rounds <= crossing + 1, "{} vs {crossing}", report.rounds);
        assert!(report.per_arm_queries.iter().all(|&q| q <= 200));
        assert_eq!(report.total_queries, env.total_queries());
        assert_eq!(report.trace.len() as u64, report.rounds + 1);
    }

    #[test]
    fn single_hypothesis_stops_immediately() {
        let v = Hypothesis::new(vec![1, 0, 1]).unwrap();
        let class = DecisionClass::explicit(vec![v.clone()]).unwrap();
        let mut env = BanditEnv::gaussian(MeanVector::true_means(vec![0.1, 0.2, 0.3]).unwrap(), 5);
        for cfg in [DisagreementConfig::brute_force(), DisagreementConfig::default()] {
            let r = run_fixed_confidence(&class, &mut env, 0.1, &cfg, &FixedConfidenceOptions::default()).unwrap();
            assert_eq!((r.rounds, r.answer.clone(), r.total_queries), (1, v.clone(), 3));
        }
    }

    #[test]
    fn incomplete_runs_are_flagged() {
        let class = DecisionClass::top_k(4, 2).unwrap();
        let mu = MeanVector::true_means(vec![0.3, 0.2, -0.1, -0.4]).unwrap();
        let mut env = BanditEnv::gaussian(mu, 1);
        let opts = FixedConfidenceOptions { max_rounds: 5, ..Default::default() };
        let r = run_fixed_confidence(&class, &mut env, 0.1, &DisagreementConfig::brute_force(), &opts).unwrap();
        assert!(!r.completed);
        assert_eq!(r.rounds, 5);
    }

    #[test]
    fn arm_cap_formula() {
        let cap = per_arm_sample_cap(0.5, 0.2, 4.0, 8, 0.1);
        let expected = 576.0 * (0.2 + (2.0 * (144.0f64 / 1.0).ln() + 2.0 * (8.0 * PI * PI / 0.1).ln()) / 4.0);
        assert!((cap - expected).abs() < 1e-9);
    }
}
