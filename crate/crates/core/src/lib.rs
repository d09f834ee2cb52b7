//! Combinatorial pure exploration for multi-armed bandits.
//!
//! Given `K` arms with unknown means and a family `V ⊂ {0,1}^K` of candidate
//! subsets, find the member with the largest total mean while drawing as few
//! samples as possible. The crate provides:
//!
//! - decision classes with linear optimization oracles ([`classes`]),
//! - the complexity measures `Φ`, `Ψ`, arm gaps and friends ([`complexity`]),
//! - a seeded simulated environment ([`env`]),
//! - the disagreement feasibility solver, both FTPL-based and exact ([`disagreement`]),
//! - the fixed-confidence, fixed-budget and version-space elimination
//!   algorithms, plus the uniform-sampling MLE baseline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod classes;
pub mod complexity;
pub mod disagreement;
pub mod env;
pub mod error;
pub mod fixed_budget;
pub mod fixed_confidence;
mod hungarian;
mod lp;
pub mod model;
pub mod refined;
pub mod report;

pub use classes::{ClassKind, DecisionClass};
pub use error::{CpeError, Result};
pub use env::{BanditEnv, Noise};
pub use model::{FractionalPoint, Hypothesis, MeanVector};

pub use report::{RunReport, TraceEvent};
