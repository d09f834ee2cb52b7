//! Fixed-confidence elimination over an explicit version space.
//!
//! Every round samples each arm on which two survivors disagree, then removes
//! each survivor `v` beaten by some survivor `u` with
//! `⟨u − v, μ̂_t⟩ > ε′_t(u, v)`. The radius `ε′_t` grows with the distance and
//! with the larger of the two sphere volumes at that distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::classes::DecisionClass;
use crate::complexity::SphereTable;
use crate::env::BanditEnv;
use crate::error::{check_len, CpeError, Result};
use crate::fixed_confidence::DEFAULT_MAX_ROUNDS;
use crate::report::{RunReport, TraceEvent};

/// `√((8d/t)(log(π²Kt²/(3δ)) + logvol))`.
pub fn refined_radius(t: u64, dist: usize, logvol: f64, arms: usize, failure_prob: f64) -> f64 {
    let t = t as f64;
    ((8.0 * dist as f64 / t) * ((PI * PI * arms as f64 * t * t / (3.0 * failure_prob)).ln() + logvol)).sqrt()
}

/// Smallest integer `t ≥ 1` with `t > 32 H⁽¹⁾ log(π²Kt²/(3δ)) + 32 H⁽²⁾`.
pub fn refined_query_cap(h1: f64, h2: f64, arms: usize, failure_prob: f64) -> u64 {
    let c = PI * PI * arms as f64 / (3.0 * failure_prob);
    let mut t = 1u64;
    loop {
        let tf = t as f64;
        if tf > 32.0 * h1 * (c * tf * tf).ln() + 32.0 * h2 {
            return t;
        }
        t += 1;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefinedOptions {
    pub max_rounds: u64,
    pub record_trace: bool,
}

impl Default for RefinedOptions {
    fn default() -> Self {
        Self { max_rounds: DEFAULT_MAX_ROUNDS, record_trace: false }
    }
}

pub fn run_refined(
    class: &DecisionClass,
    env: &mut BanditEnv,
    failure_prob: f64,
    options: &RefinedOptions,
) -> Result<RunReport> {
    check_len(class.arms(), env.arms())?;
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(CpeError::Domain(format!("failure probability {failure_prob} is outside (0, 1)")));
    }
    if options.max_rounds == 0 {
        return Err(CpeError::InvalidConfig { field: "max_rounds".into(), reason: "must be at least 1".into() });
    }
    let k = class.arms();
    let members = class.enumerate()?;
    let table = SphereTable::new(members);
    let start_counts = env.query_counts().to_vec();

    let mut survivors: Vec<usize> = (0..members.len()).collect();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0u64; k];
    let mut trace = Vec::new();
    let mut t = 1u64;

    let finish = |survivors: &[usize], t: u64, completed: bool, trace, env: &BanditEnv| {
        let per_arm: Vec<u64> = env.query_counts().iter().zip(&start_counts).map(|(n, s)| n - s).collect();
        RunReport {
            algorithm: "refined".into(),
            answer: members[survivors[0]].clone(),
            total_queries: per_arm.iter().sum(),
            per_arm_queries: per_arm,
            rounds: t,
            oracle_calls: 0,
            completed,
            seed: env.seed(),
            trace,
        }
    };

    loop {
        if survivors.len() == 1 {
            return Ok(finish(&survivors, t, true, trace, env));
        }
        let first = members[survivors[0]].bits();
        let queried: Vec<usize> =
            (0..k).filter(|&a| survivors.iter().any(|&i| members[i].bits()[a] != first[a])).collect();
        for &a in &queried {
            sums[a] += env.pull(a)?;
            counts[a] += 1;
        }
        let mu_hat: Vec<f64> =
            (0..k).map(|a| if counts[a] > 0 { sums[a] / counts[a] as f64 } else { 0.0 }).collect();
        let values: Vec<f64> = survivors.iter().map(|&i| members[i].value_unchecked(&mu_hat)).collect();

        let beaten = |vi: usize| {
            survivors.iter().enumerate().any(|(ui, &u)| {
                let v = survivors[vi];
                u != v && {
                    let radius = refined_radius(t, table.distance(u, v), table.symmetric_log_volume(u, v), k, failure_prob);
                    values[ui] - values[vi] > radius
                }
            })
        };
        let eliminated: Vec<usize> = (0..survivors.len()).filter(|&vi| beaten(vi)).map(|vi| survivors[vi]).collect();
        survivors.retain(|i| !eliminated.contains(i));

        if options.record_trace {
            trace.push(TraceEvent::RefinedRound {
                t,
                queried,
                survivors: survivors.len(),
                eliminated: eliminated.iter().map(|&i| members[i].clone()).collect(),
            });
        }
        if survivors.len() > 1 && t >= options.max_rounds {
            return Ok(finish(&survivors, t, false, trace, env));
        }
        t += 1;
    }
}
