//! Non-interactive baseline: sample every arm equally, answer `oracle(μ̂)`.

use rand::Rng;

use crate::classes::DecisionClass;
use crate::complexity::{self, gap_profile};
use crate::env::{BanditEnv, Noise};
use crate::error::{check_len, CpeError, Result};
use crate::model::MeanVector;
use crate::report::RunReport;

/// Pulls each arm `⌊T/K⌋` times; the remainder of the budget is left unused.
pub fn run_mle(class: &DecisionClass, env: &mut BanditEnv, budget: u64) -> Result<RunReport> {
    check_len(class.arms(), env.arms())?;
    let k = class.arms();
    if budget < k as u64 {
        return Err(CpeError::InsufficientBudget { budget: budget as usize, arms: k });
    }
    let per_arm = budget / k as u64;
    let start_counts = env.query_counts().to_vec();
    let mut mu_hat = Vec::with_capacity(k);
    for a in 0..k {
        mu_hat.push(env.pull_many(a, per_arm)? / per_arm as f64);
    }
    let answer = class.maximize(&mu_hat)?;
    let per_arm: Vec<u64> = env.query_counts().iter().zip(&start_counts).map(|(n, s)| n - s).collect();
    Ok(RunReport {
        algorithm: "mle".into(),
        answer,
        total_queries: per_arm.iter().sum(),
        per_arm_queries: per_arm,
        rounds: 1,
        oracle_calls: 1,
        completed: true,
        seed: env.seed(),
        trace: Vec::new(),
    })
}

fn lemma_term(class: &DecisionClass, failure_prob: f64) -> Result<f64> {
    if !(failure_prob > 0.0 && failure_prob < 1.0) {
        return Err(CpeError::Domain(format!("failure probability {failure_prob} is outside (0, 1)")));
    }
    let k = class.arms() as f64;
    Ok(complexity::phi(class)? + (2.0 * k / failure_prob).ln() / complexity::psi(class)? as f64)
}

/// `⌈(2K / min_v Δ_v²)(Φ + log(2K/δ)/Ψ)⌉`.
pub fn mle_budget(class: &DecisionClass, mu: &[f64], failure_prob: f64) -> Result<u64> {
    let profile = gap_profile(class, mu)?;
    let min_gap = profile.min_gap().ok_or_else(|| CpeError::Degenerate("class has a single member".into()))?;
    let k = class.arms() as f64;
    Ok((2.0 * k / (min_gap * min_gap) * lemma_term(class, failure_prob)?).ceil() as u64)
}

/// `√((2K/T)(Φ + log(2K/δ)/Ψ))` with `T` the number of pulls actually made.
pub fn lemma1_radius(class: &DecisionClass, budget: u64, failure_prob: f64) -> Result<f64> {
    let k = class.arms() as u64;
    let used = budget / k * k;
    if used == 0 {
        return Err(CpeError::InsufficientBudget { budget: budget as usize, arms: k as usize });
    }
    Ok((2.0 * k as f64 / used as f64 * lemma_term(class, failure_prob)?).sqrt())
}

/// Fraction of `trials` non-interactive samplings in which some `v` has
/// `|⟨v⋆ − v, μ̂ − μ⟩| / d(v⋆, v)` at or above the lemma radius. Each trial
/// draws its environment seed from `rng`.
pub fn audit_lemma1(
    class: &DecisionClass,
    mu: &MeanVector,
    noise: Noise,
    budget: u64,
    failure_prob: f64,
    trials: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    check_len(class.arms(), mu.arms())?;
    if trials == 0 {
        return Err(CpeError::InvalidConfig { field: "trials".into(), reason: "must be at least 1".into() });
    }
    let radius = lemma1_radius(class, budget, failure_prob)?;
    let profile = gap_profile(class, mu)?;
    let star = profile.star;
    let others: Vec<_> = profile.hypothesis_gaps.into_iter().map(|(v, _)| v).collect();
    let k = class.arms();
    let per_arm = budget / k as u64;
    let mut violations = 0usize;
    for _ in 0..trials {
        let mut env = BanditEnv::new(mu.clone(), noise, rng.random())?;
        let mut err = Vec::with_capacity(k);
        for a in 0..k {
            err.push(env.pull_many(a, per_arm)? / per_arm as f64 - mu[a]);
        }
        let star_err = star.value_unchecked(&err);
        if others
            .iter()
            .any(|v| (star_err - v.value_unchecked(&err)).abs() / star.distance_unchecked(v) as f64 >= radius)
        {
            violations += 1;
        }
    }
    Ok(violations as f64 / trials as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Hypothesis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn budget_example() {
        let class = DecisionClass::disj_set(6, 2).unwrap();
        let star = class.enumerate().unwrap()[0].clone();
        let mu = MeanVector::homogeneous(&star, 0.5).unwrap();
        assert_eq!(mle_budget(&class, &mu, 0.1).unwrap(), 66);
        let double = MeanVector::homogeneous(&star, 1.0).unwrap();
        let b = mle_budget(&class, &double, 0.1).unwrap();
        assert!((b as f64 - 66.0 / 4.0).abs() <= 1.0);
    }

    #[test]
    fn budget_two_hypotheses() {
        let class = DecisionClass::top_k(2, 1).unwrap();
        let b = mle_budget(&class, &[0.5, -0.5], 0.1).unwrap();
        assert_eq!(b, (4.0 / 0.25 * 40f64.ln() / 2.0).ceil() as u64);
    }

    #[test]
    fn mle_examples() {
        let class = DecisionClass::top_k(3, 2).unwrap();
        let mut env = BanditEnv::noiseless(MeanVector::true_means(vec![0.9, -0.2, 0.4]).unwrap());
        let r = run_mle(&class, &mut env, 10).unwrap();
        assert_eq!(r.answer, Hypothesis::new(vec![1, 0, 1]).unwrap());
        assert_eq!(r.per_arm_queries, vec![3, 3, 3]);
        assert!(matches!(run_mle(&class, &mut env, 2), Err(CpeError::InsufficientBudget { .. })));
    }

    #[test]
    fn audit_examples() {
        let class = DecisionClass::top_k(6, 2).unwrap();
        let mu = MeanVector::true_means(vec![0.6, 0.3, 0.1, -0.1, -0.3, -0.6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert_eq!(audit_lemma1(&class, &mu, Noise::Noiseless, 60, 0.1, 50, &mut rng).unwrap(), 0.0);
        let rate = audit_lemma1(&class, &mu, Noise::Gaussian, 600, 0.1, 1000, &mut rng).unwrap();
        assert!(rate <= 0.1, "{rate}");
        let rate = audit_lemma1(&class, &mu, Noise::Gaussian, 1_000_000, 0.1, 20, &mut rng).unwrap();
        assert!(rate <= 0.05, "{rate}");
    }
}
