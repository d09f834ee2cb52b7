//! Successive accept/reject under a fixed query budget.
//!
//! Round `t` tops every undecided arm up to `n_t` pulls, forms `μ̂_t` with the
//! decided arms' missing pulls filled in as `+1` (accepted) or `−1`
//! (rejected), and decides the undecided arm with the largest empirical gap:
//! accepted if it belongs to `v̂_t`, rejected otherwise.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::classes::{argmax_over, DecisionClass};
use crate::env::BanditEnv;
use crate::error::{check_len, CpeError, Result};
use crate::model::Hypothesis;
use crate::report::{RunReport, TraceEvent};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetSchedule {
    pub budget: u64,
    pub arms: usize,
    /// `n_1, …, n_K`: cumulative pulls of every arm still undecided in round `t`.
    pub n: Vec<u64>,
    /// `Σ_{i=1}^K 1/i`.
    pub harmonic: f64,
}

impl BudgetSchedule {
    /// `Σ_t (n_t − n_{t−1})(K + 1 − t)`.
    pub fn total_pulls(&self) -> u64 {
        let mut prev = 0;
        let mut total = 0;
        for (i, &n) in self.n.iter().enumerate() {
            total += (n - prev) * (self.arms - i) as u64;
            prev = n;
        }
        total
    }
}

pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// `n_t = ⌈(T − K)/(log̃(K)(K + 1 − t))⌉`, evaluated in exact arithmetic.
pub fn budget_schedule(budget: u64, arms: usize) -> Result<BudgetSchedule> {
    if arms == 0 {
        return Err(CpeError::Domain("budget schedule needs at least one arm".into()));
    }
    if budget < arms as u64 {
        return Err(CpeError::InsufficientBudget { budget: budget as usize, arms });
    }
    if budget == arms as u64 {
        return Err(CpeError::Degenerate(format!(
            "a budget of {budget} for {arms} arms leaves no pulls beyond the first round"
        )));
    }
    let mut h = BigRational::zero();
    for i in 1..=arms {
        h += BigRational::new(BigInt::one(), BigInt::from(i));
    }
    let spare = BigRational::from_integer(BigInt::from(budget - arms as u64));
    let n = (1..=arms)
        .map(|t| {
            let denom = &h * BigRational::from_integer(BigInt::from(arms + 1 - t));
            (&spare / denom).ceil().to_integer().to_u64().expect("schedule entry fits in u64")
        })
        .collect();
    Ok(BudgetSchedule { budget, arms, n, harmonic: harmonic(arms) })
}

/// `K² exp{Ψ(Φ − (T − K)/(9 log̃(K) H̃))}`.
pub fn error_bound(arms: usize, psi: f64, phi: f64, budget: u64, h_tilde: f64) -> f64 {
    let k = arms as f64;
    k * k * (psi * (phi - (budget as f64 - k) / (9.0 * harmonic(arms) * h_tilde))).exp()
}

fn gap_over(members: &[Hypothesis], mu_hat: &[f64], v_hat: &Hypothesis, arm: usize) -> Option<f64> {
    let top = v_hat.value_unchecked(mu_hat);
    members
        .iter()
        .filter(|v| v.bits()[arm] != v_hat.bits()[arm])
        .map(|v| (top - v.value_unchecked(mu_hat)) / v.distance_unchecked(v_hat) as f64)
        .reduce(f64::min)
}

/// `min_{v: a ∈ v̂ ⊖ v} ⟨μ̂, v̂ − v⟩ / d(v̂, v)`.
pub fn empirical_arm_gap(class: &DecisionClass, mu_hat: &[f64], v_hat: &Hypothesis, arm: usize) -> Result<f64> {
    check_len(class.arms(), mu_hat.len())?;
    check_len(class.arms(), v_hat.arms())?;
    if arm >= class.arms() {
        return Err(CpeError::Domain(format!("arm {arm} out of range")));
    }
    gap_over(class.enumerate()?, mu_hat, v_hat, arm).ok_or(CpeError::UndefinedArm(arm))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedBudgetOptions {
    pub record_trace: bool,
}

pub fn run_fixed_budget(
    class: &DecisionClass,
    env: &mut BanditEnv,
    budget: u64,
    options: &FixedBudgetOptions,
) -> Result<RunReport> {
    check_len(class.arms(), env.arms())?;
    let k = class.arms();
    let schedule = budget_schedule(budget, k)?;
    let members = class.enumerate()?;
    let start_counts = env.query_counts().to_vec();

    let mut sums = vec![0.0; k];
    let mut pulls = vec![0u64; k];
    // Some(true) = accepted, Some(false) = rejected.
    let mut decided: Vec<Option<bool>> = vec![None; k];
    let mut trace = Vec::new();
    let mut oracle_calls = 0u64;

    for (round, &n_t) in schedule.n.iter().enumerate() {
        for a in (0..k).filter(|&a| decided[a].is_none()) {
            sums[a] += env.pull_many(a, n_t - pulls[a])?;
            pulls[a] = n_t;
        }
        let nt = n_t as f64;
        let mu_hat: Vec<f64> = (0..k)
            .map(|a| match decided[a] {
                None => sums[a] / nt,
                Some(acc) => {
                    let fill = if acc { 1.0 } else { -1.0 };
                    (sums[a] + (n_t - pulls[a]) as f64 * fill) / nt
                }
            })
            .collect();
        let v_hat = argmax_over(members.iter(), &mu_hat).expect("class is nonempty");
        oracle_calls += 1;

        let gaps: Vec<Option<f64>> = (0..k)
            .map(|a| if decided[a].is_none() { gap_over(members, &mu_hat, &v_hat, a) } else { None })
            .collect();
        let chosen = gaps
            .iter()
            .enumerate()
            .filter_map(|(a, g)| g.map(|g| (a, g)))
            .fold(None, |best: Option<(usize, f64)>, (a, g)| match best {
                Some((_, bg)) if bg >= g => best,
                _ => Some((a, g)),
            })
            .map(|(a, _)| a)
            .unwrap_or_else(|| (0..k).find(|&a| decided[a].is_none()).expect("an undecided arm remains"));
        let accepted = v_hat.contains(chosen);
        decided[chosen] = Some(accepted);

        if options.record_trace {
            trace.push(TraceEvent::FixedBudgetRound {
                t: round as u64 + 1,
                target_pulls: n_t,
                mu_hat,
                v_hat,
                gaps,
                decided_arm: chosen,
                accepted,
            });
        }
    }

    let accepted: Vec<usize> = (0..k).filter(|&a| decided[a] == Some(true)).collect();
    let answer = Hypothesis::from_members(k, &accepted)?;
    let per_arm: Vec<u64> = env.query_counts().iter().zip(&start_counts).map(|(n, s)| n - s).collect();
    Ok(RunReport {
        algorithm: "fixed-budget".into(),
        answer,
        total_queries: per_arm.iter().sum(),
        per_arm_queries: per_arm,
        rounds: k as u64,
        oracle_calls,
        completed: true,
        seed: env.seed(),
        trace,
    })
}
