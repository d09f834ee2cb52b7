//! Run reports and per-round trace events shared by all algorithms.

use serde::{Deserialize, Serialize};

use crate::model::Hypothesis;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub answer: Hypothesis,
    /// Real pulls per arm. Hallucinated values are never counted.
    pub per_arm_queries: Vec<u64>,
    pub total_queries: u64,
    pub rounds: u64,
    pub oracle_calls: u64,
    /// False when the run hit its round limit before its stopping rule fired.
    pub completed: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
}

impl RunReport {
    pub fn is_correct(&self, star: &Hypothesis) -> bool {
        self.completed && &self.answer == star
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    /// One round of the disagreement-based fixed-confidence algorithm. Round 0
    /// is the initial pull of every arm.
    FixedConfidenceRound {
        t: u64,
        delta_t: f64,
        v_hat: Hypothesis,
        /// Arms whose disagreement verdict was true, i.e. that were queried.
        queried: Vec<bool>,
        /// The full observation vector, hallucinated entries included.
        y: Vec<f64>,
        oracle_calls: u64,
    },
    FixedBudgetRound {
        t: u64,
        target_pulls: u64,
        mu_hat: Vec<f64>,
        v_hat: Hypothesis,
        /// Empirical arm gaps of undecided arms, `None` when undefined.
        gaps: Vec<Option<f64>>,
        decided_arm: usize,
        accepted: bool,
    },
    RefinedRound {
        t: u64,
        queried: Vec<usize>,
        survivors: usize,
        eliminated: Vec<Hypothesis>,
    },
}
