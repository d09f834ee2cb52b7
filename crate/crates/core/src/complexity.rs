//! Complexity measures of a decision class and of an instance `(V, μ)`.
//!
//! `μ`-independent: the minimum distance `Ψ`, the sphere growth rate `Φ`, the
//! diameter, sphere volumes and the symmetric log-volume `D(v, v')`.
//! Instance-dependent: hypothesis and arm gaps, `H`, `H̃`, `H⁽¹⁾`, `H⁽²⁾` and
//! the unnormalized / complement-based gaps used by earlier analyses.
//!
//! All logarithms are natural. The four named families have closed-form
//! `Φ`, `Ψ` and diameter; explicit classes are measured by enumeration.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classes::{ClassKind, DecisionClass};
use crate::error::{check_len, CpeError, Result};
use crate::model::Hypothesis;

/// Gaps below this are treated as ties.
pub const GAP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassGeometry {
    pub psi: usize,
    pub phi: f64,
    pub diameter: usize,
    pub cardinality: u128,
}

pub fn geometry(class: &DecisionClass) -> Result<ClassGeometry> {
    Ok(ClassGeometry { psi: psi(class)?, phi: phi(class)?, diameter: diameter(class)?, cardinality: class.cardinality() })
}

fn ensure_member(class: &DecisionClass, v: &Hypothesis) -> Result<()> {
    if class.contains(v) {
        Ok(())
    } else {
        Err(CpeError::Domain(format!("{v:?} is not a member of the {} class", class.name())))
    }
}

/// `|B(k, v)| = |{u ∈ V : d(v, u) = k}|`.
pub fn sphere_volume(class: &DecisionClass, v: &Hypothesis, k: usize) -> Result<usize> {
    ensure_member(class, v)?;
    Ok(class.enumerate()?.iter().filter(|u| u.distance_unchecked(v) == k).count())
}

/// `max{log|B(d, v)|, log|B(d, v')|}` with `d = d(v, v')`.
pub fn symmetric_log_volume(class: &DecisionClass, v: &Hypothesis, w: &Hypothesis) -> Result<f64> {
    ensure_member(class, w)?;
    let d = v.distance(w)?;
    let a = sphere_volume(class, v, d)?;
    let b = sphere_volume(class, w, d)?;
    Ok((a.max(b) as f64).ln())
}

/// Minimum pairwise distance. A class with a single member has no pairs; its
/// `Ψ` is reported as `K` so that downstream radii stay finite.
pub fn psi(class: &DecisionClass) -> Result<usize> {
    if class.cardinality() < 2 {
        return Ok(class.arms().max(1));
    }
    Ok(match class.kind() {
        ClassKind::TopK { .. } => 2,
        ClassKind::DisjSet { size, .. } => 2 * size,
        ClassKind::Matching { .. } => 4,
        ClassKind::Biclique { size, .. } => 2 * isqrt(*size),
        ClassKind::Explicit { .. } => return psi_enumerated(class),
    })
}

/// `max_{k ≥ 1, v} log|B(k, v)| / k`; zero for a single-member class.
pub fn phi(class: &DecisionClass) -> Result<f64> {
    if class.cardinality() < 2 {
        return Ok(0.0);
    }
    let lgc = ln_binomial;
    Ok(match class.kind() {
        ClassKind::TopK { arms, size } => (1..=(*size).min(arms - size))
            .map(|j| (lgc(*size, j) + lgc(arms - size, j)) / (2 * j) as f64)
            .fold(f64::NEG_INFINITY, f64::max),
        ClassKind::DisjSet { arms, size } => ((arms / size - 1) as f64).ln() / (2 * size) as f64,
        ClassKind::Matching { side } => {
            // A permutation moving exactly j vertices is at distance 2j; there
            // are C(n, j) · D_j of them, D_j the derangement count.
            let n = *side;
            let mut derangements = vec![1.0f64, 0.0];
            for j in 2..=n {
                derangements.push((j - 1) as f64 * (derangements[j - 1] + derangements[j - 2]));
            }
            (2..=n)
                .map(|j| (lgc(n, j) + derangements[j].ln()) / (2 * j) as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        }
        ClassKind::Biclique { arms, size } => {
            let (n, r) = (isqrt(*arms), isqrt(*size));
            biclique_log_spheres(n, r)
                .into_iter()
                .map(|(d, log_count)| log_count / d as f64)
                .fold(f64::NEG_INFINITY, f64::max)
        }
        ClassKind::Explicit { .. } => return phi_enumerated(class),
    })
}

/// Largest pairwise distance.
pub fn diameter(class: &DecisionClass) -> Result<usize> {
    if class.cardinality() < 2 {
        return Ok(0);
    }
    Ok(match class.kind() {
        ClassKind::TopK { arms, size } => 2 * (*size).min(arms - size),
        ClassKind::DisjSet { size, .. } => 2 * size,
        ClassKind::Matching { side } => 2 * side,
        ClassKind::Biclique { arms, size } => {
            let (n, r) = (isqrt(*arms), isqrt(*size));
            let x = r.min(n - r);
            2 * (r * r - (r - x) * (r - x))
        }
        ClassKind::Explicit { .. } => return diameter_enumerated(class),
    })
}

/// Sphere sizes of a biclique class grouped by distance, as `(d, ln count)`.
/// Swapping `x` rows and `y` columns out of an `r × r` biclique moves
/// `2(r² − (r−x)(r−y))` edges.
fn biclique_log_spheres(n: usize, r: usize) -> Vec<(usize, f64)> {
    let mut by_distance: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let swaps = r.min(n - r);
    for x in 0..=swaps {
        for y in 0..=swaps {
            if x == 0 && y == 0 {
                continue;
            }
            let d = 2 * (r * r - (r - x) * (r - y));
            let log_count =
                ln_binomial(r, x) + ln_binomial(n - r, x) + ln_binomial(r, y) + ln_binomial(n - r, y);
            by_distance.entry(d).or_default().push(log_count);
        }
    }
    by_distance.into_iter().map(|(d, logs)| (d, log_sum_exp(&logs))).collect()
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub(crate) fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    // Exact while the running product stays below 2^53.
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round().ln()
}

fn isqrt(x: usize) -> usize {
    (x as f64).sqrt().round() as usize
}

pub fn psi_enumerated(class: &DecisionClass) -> Result<usize> {
    let all = class.enumerate()?;
    if all.len() < 2 {
        return Ok(class.arms().max(1));
    }
    let mut best = usize::MAX;
    for (i, u) in all.iter().enumerate() {
        for v in &all[i + 1..] {
            best = best.min(u.distance_unchecked(v));
        }
    }
    Ok(best)
}

pub fn phi_enumerated(class: &DecisionClass) -> Result<f64> {
    let all = class.enumerate()?;
    let mut best = 0.0f64;
    let mut counts = vec![0usize; class.arms() + 1];
    for v in all {
        counts.fill(0);
        for u in all {
            counts[u.distance_unchecked(v)] += 1;
        }
        for (k, &c) in counts.iter().enumerate().skip(1) {
            if c > 0 {
                best = best.max((c as f64).ln() / k as f64);
            }
        }
    }
    Ok(best)
}

pub fn diameter_enumerated(class: &DecisionClass) -> Result<usize> {
    let all = class.enumerate()?;
    let mut best = 0;
    for (i, u) in all.iter().enumerate() {
        for v in &all[i + 1..] {
            best = best.max(u.distance_unchecked(v));
        }
    }
    Ok(best)
}

/// Distances and sphere volumes for every pair of an enumerated class.
pub struct SphereTable<'a> {
    members: &'a [Hypothesis],
    distances: Vec<u32>,
    volumes: Vec<Vec<u32>>,
}

impl<'a> SphereTable<'a> {
    pub fn new(members: &'a [Hypothesis]) -> Self {
        let n = members.len();
        let arms = members.first().map_or(0, Hypothesis::arms);
        let mut distances = vec![0u32; n * n];
        let mut volumes = vec![vec![0u32; arms + 1]; n];
        for i in 0..n {
            for j in i..n {
                let d = members[i].distance_unchecked(&members[j]) as u32;
                distances[i * n + j] = d;
                distances[j * n + i] = d;
                volumes[i][d as usize] += 1;
                if i != j {
                    volumes[j][d as usize] += 1;
                }
            }
        }
        Self { members, distances, volumes }
    }

    pub fn members(&self) -> &'a [Hypothesis] {
        self.members
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        self.distances[i * self.members.len() + j] as usize
    }

    pub fn volume(&self, i: usize, k: usize) -> usize {
        self.volumes[i][k] as usize
    }

    /// `D(v_i, v_j)`.
    pub fn symmetric_log_volume(&self, i: usize, j: usize) -> f64 {
        let d = self.distance(i, j);
        (self.volume(i, d).max(self.volume(j, d)) as f64).ln()
    }
}

/// Hypothesis and arm gaps of an instance with a unique optimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub star: Hypothesis,
    /// `Δ_v = ⟨v⋆ − v, μ⟩ / d(v⋆, v)` for every `v ≠ v⋆`, in lexicographic order.
    pub hypothesis_gaps: Vec<(Hypothesis, f64)>,
    /// `Δ_a`, or `None` for arms on which every member agrees with `v⋆`.
    pub arm_gaps: Vec<Option<f64>>,
}

impl GapProfile {
    pub fn min_gap(&self) -> Option<f64> {
        self.hypothesis_gaps.iter().map(|(_, g)| *g).reduce(f64::min)
    }

    pub fn arm_gap(&self, arm: usize) -> Result<f64> {
        self.arm_gaps
            .get(arm)
            .ok_or_else(|| CpeError::Domain(format!("arm {arm} out of range")))?
            .ok_or(CpeError::UndefinedArm(arm))
    }

    /// `H = Σ_a Δ_a⁻²` over arms with a defined gap.
    pub fn h_sum(&self) -> f64 {
        self.arm_gaps.iter().flatten().map(|g| g.powi(-2)).sum()
    }

    /// Defined arm gaps, in arm order.
    pub fn defined_arm_gaps(&self) -> Vec<f64> {
        self.arm_gaps.iter().flatten().copied().collect()
    }
}

/// Index of the unique maximizer of `⟨v, μ⟩`, rejecting ties.
pub(crate) fn unique_optimum(members: &[Hypothesis], mu: &[f64]) -> Result<usize> {
    let values: Vec<f64> = members.iter().map(|v| v.value_unchecked(mu)).collect();
    let (best, &top) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| CpeError::Degenerate("empty class".into()))?;
    for (i, v) in members.iter().enumerate() {
        if i != best {
            let gap = (top - values[i]) / v.distance_unchecked(&members[best]) as f64;
            if gap <= GAP_TOLERANCE {
                return Err(CpeError::Degenerate(format!(
                    "optimum is not unique: {:?} and {:?} both attain {top}",
                    members[best], v
                )));
            }
        }
    }
    Ok(best)
}

pub fn gap_profile(class: &DecisionClass, mu: &[f64]) -> Result<GapProfile> {
    check_len(class.arms(), mu.len())?;
    let members = class.enumerate()?;
    let star_idx = unique_optimum(members, mu)?;
    let star = members[star_idx].clone();
    let star_val = star.value_unchecked(mu);
    let mut arm_gaps: Vec<Option<f64>> = vec![None; class.arms()];
    let mut hypothesis_gaps = Vec::with_capacity(members.len().saturating_sub(1));
    for (i, v) in members.iter().enumerate() {
        if i == star_idx {
            continue;
        }
        let d = star.distance_unchecked(v);
        let gap = (star_val - v.value_unchecked(mu)) / d as f64;
        for a in star.symmetric_difference(v) {
            arm_gaps[a] = Some(arm_gaps[a].map_or(gap, |g| g.min(gap)));
        }
        hypothesis_gaps.push((v.clone(), gap));
    }
    Ok(GapProfile { star, hypothesis_gaps, arm_gaps })
}

/// `H̃ = max_j (K + 1 − j) (Δ^(j))⁻²` with `Δ^(j)` the j-th largest gap.
pub fn fixed_budget_h_tilde(arm_gaps: &[f64]) -> Result<f64> {
    if arm_gaps.is_empty() {
        return Err(CpeError::Degenerate("no arm gaps".into()));
    }
    if let Some(pos) = arm_gaps.iter().position(|&g| !(g > 0.0)) {
        return Err(CpeError::Degenerate(format!("arm gap {pos} is {}, expected > 0", arm_gaps[pos])));
    }
    let mut sorted = arm_gaps.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let k = sorted.len();
    Ok(sorted
        .iter()
        .enumerate()
        .map(|(j, g)| (k - j) as f64 / (g * g))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Per-arm `(H⁽¹⁾_a, H⁽²⁾_a)`, `None` where the arm is in no `v ⊖ v⋆`.
pub fn refined_profile(class: &DecisionClass, mu: &[f64]) -> Result<Vec<Option<(f64, f64)>>> {
    check_len(class.arms(), mu.len())?;
    let members = class.enumerate()?;
    let star_idx = unique_optimum(members, mu)?;
    let table = SphereTable::new(members);
    let star = &members[star_idx];
    let star_val = star.value_unchecked(mu);
    let mut out: Vec<Option<(f64, f64)>> = vec![None; class.arms()];
    for (i, v) in members.iter().enumerate() {
        if i == star_idx {
            continue;
        }
        let d = table.distance(i, star_idx) as f64;
        let gap = star_val - v.value_unchecked(mu);
        let h1 = d / (gap * gap);
        let h2 = h1 * table.symmetric_log_volume(i, star_idx);
        for a in star.symmetric_difference(v) {
            out[a] = Some(match out[a] {
                None => (h1, h2),
                Some((x, y)) => (x.max(h1), y.max(h2)),
            });
        }
    }
    Ok(out)
}

pub fn refined_complexities(class: &DecisionClass, mu: &[f64], arm: usize) -> Result<(f64, f64)> {
    if arm >= class.arms() {
        return Err(CpeError::Domain(format!("arm {arm} out of range")));
    }
    refined_profile(class, mu)?[arm].ok_or(CpeError::UndefinedArm(arm))
}

/// Gaps from earlier analyses, per arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorGaps {
    /// `Δ^(C)_a = min_{v: a ∈ v ⊖ v⋆} ⟨μ, v⋆ − v⟩`.
    pub unnormalized: Vec<Option<f64>>,
    /// `Δ^(G)_a = min_{v: a ∈ v ⊖ v⋆} Δ^(G)_v`.
    pub complement: Vec<Option<f64>>,
    /// The complement `C_v` of every `v ≠ v⋆` (index into the enumeration).
    pub complements: Vec<(Hypothesis, Hypothesis)>,
}

/// `Δ^(G)_v = max_{v': ⟨μ, v' − v⟩ > 0} ⟨μ, v' − v⟩ / d(v', v)`; the maximizer
/// is the complement `C_v`, ties going to the closer set and then to the
/// lexicographically smaller one.
pub fn prior_gap_profile(class: &DecisionClass, mu: &[f64]) -> Result<PriorGaps> {
    check_len(class.arms(), mu.len())?;
    let members = class.enumerate()?;
    let star_idx = unique_optimum(members, mu)?;
    let star = &members[star_idx];
    let values: Vec<f64> = members.iter().map(|v| v.value_unchecked(mu)).collect();
    let k = class.arms();
    let mut unnormalized: Vec<Option<f64>> = vec![None; k];
    let mut complement: Vec<Option<f64>> = vec![None; k];
    let mut complements = Vec::new();
    for (i, v) in members.iter().enumerate() {
        if i == star_idx {
            continue;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for (j, w) in members.iter().enumerate() {
            let diff = values[j] - values[i];
            if diff <= 0.0 {
                continue;
            }
            let d = w.distance_unchecked(v);
            let ratio = diff / d as f64;
            let better = match best {
                None => true,
                Some((r, bd, _)) => ratio > r || (ratio == r && d < bd),
            };
            if better {
                best = Some((ratio, d, j));
            }
        }
        // v ≠ v⋆ is beaten by v⋆ at least, so a complement exists.
        let (g_gap, _, c_idx) = best.expect("v⋆ improves on every other member");
        complements.push((v.clone(), members[c_idx].clone()));
        let c_gap = values[star_idx] - values[i];
        for a in star.symmetric_difference(v) {
            unnormalized[a] = Some(unnormalized[a].map_or(c_gap, |g| g.min(c_gap)));
            complement[a] = Some(complement[a].map_or(g_gap, |g| g.min(g_gap)));
        }
    }
    Ok(PriorGaps { unnormalized, complement, complements })
}

pub fn prior_gaps(class: &DecisionClass, mu: &[f64], arm: usize) -> Result<(f64, f64)> {
    if arm >= class.arms() {
        return Err(CpeError::Domain(format!("arm {arm} out of range")));
    }
    let p = prior_gap_profile(class, mu)?;
    match (p.unnormalized[arm], p.complement[arm]) {
        (Some(c), Some(g)) => Ok((c, g)),
        _ => Err(CpeError::UndefinedArm(arm)),
    }
}
