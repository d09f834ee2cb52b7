//! Deciding whether an arm is still in disagreement.
//!
//! The question is whether some point `x` of `conv(V)` with `x(a) = b` lies in
//! the empirical `Δ`-version space, i.e. `⟨μ̂, u − x⟩ ≤ Δ‖u − x‖₁` for every
//! `u ∈ V`. Two backends answer it:
//!
//! * [`Backend::Ftpl`] plays a follow-the-perturbed-leader learner over `V`
//!   against best responses on the face `{x(a) = b}`. Only linear optimization
//!   oracle calls are needed. A `false` verdict is always correct; a `true`
//!   verdict comes with an averaged certificate that is approximately feasible.
//! * [`Backend::BruteForce`] enumerates `V` and solves the problem exactly as a
//!   matrix game over the face members.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classes::DecisionClass;
use crate::error::{check_len, CpeError, Result};
use crate::lp::matrix_game_value;
use crate::model::{FractionalPoint, Hypothesis};

/// Smallest accepted radius.
pub const MIN_DELTA: f64 = 1e-6;
/// Slack used when declaring an FTPL round infeasible.
const FTPL_TOL: f64 = 1e-9;
/// Largest game value still treated as feasible by the exact backend.
const EXACT_TOL: f64 = 1e-10;
/// Upper limit on FTPL rounds times samples per call.
const MAX_FTPL_WORK: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Ftpl,
    BruteForce,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DisagreementConfig {
    pub backend: Backend,
    pub scale_t: f64,
    pub scale_m: f64,
    pub paper_constants: bool,
}

impl Default for DisagreementConfig {
    fn default() -> Self {
        Self { backend: Backend::Ftpl, scale_t: 1e-4, scale_m: 1e-4, paper_constants: false }
    }
}

impl DisagreementConfig {
    pub fn brute_force() -> Self {
        Self { backend: Backend::BruteForce, ..Self::default() }
    }

    pub fn ftpl(scale_t: f64, scale_m: f64) -> Self {
        Self { backend: Backend::Ftpl, scale_t, scale_m, paper_constants: false }
    }

    pub fn paper() -> Self {
        Self { backend: Backend::Ftpl, scale_t: 1.0, scale_m: 1.0, paper_constants: true }
    }

    pub fn validate(&self) -> Result<()> {
        for (field, value) in [("scale_t", self.scale_t), ("scale_m", self.scale_m)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CpeError::InvalidConfig {
                    field: format!("disagreement.{field}"),
                    reason: format!("{value} must be positive and finite"),
                });
            }
        }
        Ok(())
    }

    fn scales(&self) -> (f64, f64) {
        if self.paper_constants {
            (1.0, 1.0)
        } else {
            (self.scale_t, self.scale_m)
        }
    }
}

/// Rounds `T`, samples per round `m` and perturbation parameter `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FtplConstants {
    pub rounds: u64,
    pub samples: u64,
    pub epsilon: f64,
}

/// `T = 169K³ log(4K/δ)/Δ²`, `m = T log(4KT/δ)`, `ε = (25KT log(4K/δ))^{-1/2}`,
/// with `T` and `m` multiplied by the configured scales and rounded up. `m`
/// and `ε` are evaluated at the scaled `T`.
pub fn ftpl_constants(arms: usize, delta: f64, failure_prob: f64, config: &DisagreementConfig) -> Result<FtplConstants> {
    config.validate()?;
    check_delta(delta)?;
    check_prob(failure_prob)?;
    let k = arms as f64;
    let (scale_t, scale_m) = config.scales();
    let log_term = (4.0 * k / failure_prob).ln();
    let t = (scale_t * 169.0 * k.powi(3) * log_term / (delta * delta)).ceil().max(1.0);
    let m = (scale_m * t * (4.0 * k * t / failure_prob).ln()).ceil().max(1.0);
    if t * m > MAX_FTPL_WORK {
        return Err(CpeError::InvalidConfig {
            field: "disagreement.scale_t".into(),
            reason: format!("{t} rounds of {m} samples exceed the work limit; lower the scales"),
        });
    }
    let epsilon = (1.0 / (25.0 * k * t * log_term)).sqrt();
    Ok(FtplConstants { rounds: t as u64, samples: m as u64, epsilon })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= MIN_DELTA) || !delta.is_finite() {
        return Err(CpeError::Domain(format!("radius {delta} must be at least {MIN_DELTA}")));
    }
    Ok(())
}

fn check_prob(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(CpeError::Domain(format!("failure probability {p} is outside (0, 1)")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub feasible: bool,
    pub certificate: Option<FractionalPoint>,
    pub rounds_used: u64,
    pub oracle_calls: u64,
}

impl FeasibilityVerdict {
    fn infeasible(rounds_used: u64, oracle_calls: u64) -> Self {
        Self { feasible: false, certificate: None, rounds_used, oracle_calls }
    }
}

fn perturbation(arms: usize, epsilon: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..arms).map(|_| rng.random::<f64>() / epsilon).collect()
}

/// `oracle(ℓ + σ)` with `σ ∼ Unif([0, 1/ε]^K)`.
pub fn ftpl_decision(class: &DecisionClass, cumulative_loss: &[f64], epsilon: f64, rng: &mut impl Rng) -> Result<Hypothesis> {
    check_len(class.arms(), cumulative_loss.len())?;
    if !(epsilon > 0.0) {
        return Err(CpeError::Domain(format!("epsilon {epsilon} must be positive")));
    }
    if !class.supports_oracle() {
        return Err(CpeError::UnsupportedOracle(class.name()));
    }
    let sigma = perturbation(class.arms(), epsilon, rng);
    let c: Vec<f64> = cumulative_loss.iter().zip(&sigma).map(|(l, s)| l + s).collect();
    class.oracle(&c)
}

/// Follow-the-perturbed-leader over `V` for losses: plays
/// `argmin_u ⟨u, L + σ⟩` with fresh `σ` each call.
#[derive(Clone, Debug)]
pub struct FtplLearner<'a> {
    class: &'a DecisionClass,
    epsilon: f64,
    cumulative: Vec<f64>,
}

impl<'a> FtplLearner<'a> {
    pub fn new(class: &'a DecisionClass, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(CpeError::Domain(format!("epsilon {epsilon} must be positive")));
        }
        if !class.supports_oracle() {
            return Err(CpeError::UnsupportedOracle(class.name()));
        }
        Ok(Self { class, epsilon, cumulative: vec![0.0; class.arms()] })
    }

    pub fn cumulative_loss(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn play(&self, rng: &mut impl Rng) -> Hypothesis {
        let sigma = perturbation(self.class.arms(), self.epsilon, rng);
        let c: Vec<f64> = self.cumulative.iter().zip(&sigma).map(|(l, s)| -(l + s)).collect();
        self.class.oracle(&c).expect("learner class has an oracle")
    }

    pub fn update(&mut self, loss: &[f64]) -> Result<()> {
        check_len(self.cumulative.len(), loss.len())?;
        for (c, l) in self.cumulative.iter_mut().zip(loss) {
            *c += l;
        }
        Ok(())
    }
}

fn averaged_cost(samples: &[Hypothesis], delta: f64, mu_hat: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let k = mu_hat.len();
    let mut u_bar = vec![0.0; k];
    for u in samples {
        for (acc, &b) in u_bar.iter_mut().zip(u.bits()) {
            *acc += b as f64;
        }
    }
    let m = samples.len() as f64;
    u_bar.iter_mut().for_each(|x| *x /= m);
    let cost = u_bar.iter().zip(mu_hat).map(|(u, mu)| delta * (1.0 - 2.0 * u) + mu).collect();
    (cost, u_bar)
}

/// Best response on the face `{v(a) = b}` to the sample average `ū`:
/// maximizes `⟨v, Δ(1 − 2ū) + μ̂⟩`. Returns `None` when the face is empty.
pub fn inner_program(
    class: &DecisionClass,
    samples: &[Hypothesis],
    delta: f64,
    mu_hat: &[f64],
    arm: usize,
    bit: u8,
) -> Result<Option<(f64, Hypothesis)>> {
    if samples.is_empty() {
        return Err(CpeError::Domain("inner program needs at least one sample".into()));
    }
    check_len(class.arms(), mu_hat.len())?;
    for u in samples {
        check_len(class.arms(), u.arms())?;
    }
    let (cost, _) = averaged_cost(samples, delta, mu_hat);
    Ok(class.maximize_constrained(&cost, arm, bit)?.map(|x| (x.value_unchecked(&cost), x)))
}

/// Decides the disagreement program for arm `arm` with `x(arm) = bit`.
#[allow(clippy::too_many_arguments)]
pub fn disagree(
    class: &DecisionClass,
    arm: usize,
    bit: u8,
    delta: f64,
    mu_hat: &[f64],
    failure_prob: f64,
    config: &DisagreementConfig,
    rng: &mut impl Rng,
) -> Result<FeasibilityVerdict> {
    check_len(class.arms(), mu_hat.len())?;
    check_delta(delta)?;
    match config.backend {
        Backend::BruteForce => {
            check_prob(failure_prob)?;
            let feasible = exact_disagreement(class, arm, bit, delta, mu_hat)?;
            let calls = class.enumerate()?.len() as u64;
            Ok(FeasibilityVerdict { feasible, certificate: None, rounds_used: 0, oracle_calls: calls })
        }
        Backend::Ftpl => ftpl_disagree(class, arm, bit, delta, mu_hat, failure_prob, config, rng),
    }
}

#[allow(clippy::too_many_arguments)]
fn ftpl_disagree(
    class: &DecisionClass,
    arm: usize,
    bit: u8,
    delta: f64,
    mu_hat: &[f64],
    failure_prob: f64,
    config: &DisagreementConfig,
    rng: &mut impl Rng,
) -> Result<FeasibilityVerdict> {
    if !class.supports_oracle() {
        return Err(CpeError::UnsupportedOracle(class.name()));
    }
    let k = class.arms();
    let consts = ftpl_constants(k, delta, failure_prob, config)?;
    let mut cumulative = vec![0.0; k];
    let mut x_sum = vec![0.0; k];
    let mut samples = Vec::with_capacity(consts.samples as usize);
    let mut calls = 0u64;
    let val_weights: Vec<f64> = mu_hat.iter().map(|mu| delta - mu).collect();

    for round in 1..=consts.rounds {
        samples.clear();
        for _ in 0..consts.samples {
            let sigma = perturbation(k, consts.epsilon, rng);
            let c: Vec<f64> = cumulative.iter().zip(&sigma).map(|(l, s)| -(l + s)).collect();
            samples.push(class.oracle(&c)?);
        }
        calls += consts.samples;
        let (cost, u_bar) = averaged_cost(&samples, delta, mu_hat);
        calls += 1;
        let Some(x) = class.constrained_oracle(&cost, arm, bit)? else {
            return Ok(FeasibilityVerdict::infeasible(round, calls));
        };
        let s = x.value_unchecked(&cost);
        let val: f64 = u_bar.iter().zip(&val_weights).map(|(u, w)| u * w).sum();
        if s + val < -FTPL_TOL {
            return Ok(FeasibilityVerdict::infeasible(round, calls));
        }
        for ((l, xs), (&b, mu)) in cumulative.iter_mut().zip(x_sum.iter_mut()).zip(x.bits().iter().zip(mu_hat)) {
            *l += delta - 2.0 * delta * b as f64 - mu;
            *xs += b as f64;
        }
    }
    let t = consts.rounds as f64;
    let x_bar = FractionalPoint::new(x_sum.into_iter().map(|s| (s / t).clamp(0.0, 1.0)).collect())?;
    Ok(FeasibilityVerdict { feasible: true, certificate: Some(x_bar), rounds_used: consts.rounds, oracle_calls: calls })
}

/// Exact decision by enumeration: is there `λ` in the simplex over the face
/// members `v_i` with `Σ_i λ_i (⟨μ̂, u − v_i⟩ − Δ d(u, v_i)) ≤ 0` for all `u`?
pub fn exact_disagreement(class: &DecisionClass, arm: usize, bit: u8, delta: f64, mu_hat: &[f64]) -> Result<bool> {
    check_len(class.arms(), mu_hat.len())?;
    if arm >= class.arms() || bit > 1 {
        return Err(CpeError::Domain(format!("constraint x({arm}) = {bit} is invalid")));
    }
    let members = class.enumerate()?;
    let values: Vec<f64> = members.iter().map(|v| v.value_unchecked(mu_hat)).collect();
    let face: Vec<usize> = (0..members.len()).filter(|&i| members[i].bits()[arm] == bit).collect();
    if face.is_empty() {
        return Ok(false);
    }
    let game: Vec<Vec<f64>> = face
        .iter()
        .map(|&i| {
            members
                .iter()
                .enumerate()
                .map(|(j, u)| values[j] - values[i] - delta * u.distance_unchecked(&members[i]) as f64)
                .collect()
        })
        .collect();
    if game.iter().any(|row| row.iter().all(|&g| g <= EXACT_TOL)) {
        return Ok(true);
    }
    Ok(matrix_game_value(&game) <= EXACT_TOL)
}

/// Whether `x(arm) = bit` and `⟨μ̂, u − x⟩ ≤ Δ‖u − x‖₁ + Δ` for every `u ∈ V`.
pub fn relaxed_feasibility_check(
    class: &DecisionClass,
    x: &FractionalPoint,
    delta: f64,
    mu_hat: &[f64],
    arm: usize,
    bit: u8,
) -> Result<bool> {
    check_len(class.arms(), mu_hat.len())?;
    check_len(class.arms(), x.coords().len())?;
    if arm >= class.arms() {
        return Err(CpeError::Domain(format!("arm {arm} out of range")));
    }
    let coords = x.coords();
    if (coords[arm] - bit as f64).abs() > 1e-9 {
        return Ok(false);
    }
    let x_val: f64 = coords.iter().zip(mu_hat).map(|(a, b)| a * b).sum();
    Ok(class.enumerate()?.iter().all(|u| {
        let l1: f64 = u.bits().iter().zip(coords).map(|(&b, x)| (b as f64 - x).abs()).sum();
        u.value_unchecked(mu_hat) - x_val <= delta * l1 + delta + 1e-9
    }))
}
