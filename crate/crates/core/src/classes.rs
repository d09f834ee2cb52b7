//! Combinatorial decision classes and their linear optimization oracles.
//!
//! Every optimizer here returns `argmax_{v ∈ V} ⟨v, c⟩`, breaking ties toward
//! the lexicographically smallest bit vector. Graph families index the edge
//! `(i, j)` of `K_{n,n}` as arm `i·n + j`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, CpeError, Result};
use crate::hungarian::min_cost_assignment;
use crate::model::Hypothesis;

pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;

/// The family descriptor, as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassKind {
    /// All subsets of `size` arms out of `arms`.
    TopK { arms: usize, size: usize },
    /// `arms / size` consecutive disjoint blocks of `size` arms.
    DisjSet { arms: usize, size: usize },
    /// Perfect matchings of `K_{side,side}`; `arms = side²`.
    Matching { side: usize },
    /// `√size × √size` bicliques of `K_{√arms,√arms}`.
    Biclique { arms: usize, size: usize },
    Explicit { members: Vec<Hypothesis> },
}

#[derive(Clone, Debug)]
pub struct DecisionClass {
    kind: ClassKind,
    arms: usize,
    cap: usize,
    members: OnceLock<Result<Vec<Hypothesis>>>,
}

impl PartialEq for DecisionClass {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

fn exact_sqrt(x: usize) -> Option<usize> {
    let r = (x as f64).sqrt().round() as usize;
    (r * r == x).then_some(r)
}

fn invalid(field: &str, reason: impl Into<String>) -> CpeError {
    CpeError::InvalidConfig { field: field.to_string(), reason: reason.into() }
}

pub(crate) fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

impl DecisionClass {
    pub fn new(kind: ClassKind) -> Result<Self> {
        let arms = match &kind {
            ClassKind::TopK { arms, size } => {
                if *size < 1 || size >= arms {
                    return Err(invalid("size", format!("top-k needs 1 <= size < arms, got size={size}, arms={arms}")));
                }
                *arms
            }
            ClassKind::DisjSet { arms, size } => {
                if *size < 1 || *arms == 0 || arms % size != 0 {
                    return Err(invalid("size", format!("disjoint sets need size | arms, got size={size}, arms={arms}")));
                }
                *arms
            }
            ClassKind::Matching { side } => {
                if *side < 1 {
                    return Err(invalid("side", "matching needs at least one vertex per side"));
                }
                side * side
            }
            ClassKind::Biclique { arms, size } => {
                let n = exact_sqrt(*arms).ok_or_else(|| invalid("arms", format!("{arms} is not a perfect square")))?;
                let r = exact_sqrt(*size).ok_or_else(|| invalid("size", format!("{size} is not a perfect square")))?;
                if r < 1 || r >= n {
                    return Err(invalid("size", format!("biclique side {r} must lie in [1, {n})")));
                }
                *arms
            }
            ClassKind::Explicit { members } => {
                let first = members.first().ok_or_else(|| invalid("members", "explicit class is empty"))?;
                let arms = first.arms();
                if members.iter().any(|m| m.arms() != arms) {
                    return Err(invalid("members", "members have different lengths"));
                }
                let mut sorted = members.clone();
                sorted.sort();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(invalid("members", "members are not distinct"));
                }
                return Ok(Self {
                    kind: ClassKind::Explicit { members: sorted },
                    arms,
                    cap: DEFAULT_ENUMERATION_CAP,
                    members: OnceLock::new(),
                });
            }
        };
        Ok(Self { kind, arms, cap: DEFAULT_ENUMERATION_CAP, members: OnceLock::new() })
    }

    pub fn top_k(arms: usize, size: usize) -> Result<Self> {
        Self::new(ClassKind::TopK { arms, size })
    }

    pub fn disj_set(arms: usize, size: usize) -> Result<Self> {
        Self::new(ClassKind::DisjSet { arms, size })
    }

    pub fn matching(side: usize) -> Result<Self> {
        Self::new(ClassKind::Matching { side })
    }

    pub fn biclique(arms: usize, size: usize) -> Result<Self> {
        Self::new(ClassKind::Biclique { arms, size })
    }

    pub fn explicit(members: Vec<Hypothesis>) -> Result<Self> {
        Self::new(ClassKind::Explicit { members })
    }

    /// Sets the largest class size `enumerate` will materialize.
    pub fn with_enumeration_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self.members = OnceLock::new();
        self
    }

    pub fn kind(&self) -> &ClassKind {
        &self.kind
    }

    pub fn arms(&self) -> usize {
        self.arms
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ClassKind::TopK { .. } => "top-k",
            ClassKind::DisjSet { .. } => "disj-set",
            ClassKind::Matching { .. } => "matching",
            ClassKind::Biclique { .. } => "biclique",
            ClassKind::Explicit { .. } => "explicit",
        }
    }

    /// Biclique maximization is NP-hard, so no oracle is offered for it.
    pub fn supports_oracle(&self) -> bool {
        !matches!(self.kind, ClassKind::Biclique { .. })
    }

    /// `|V|`, saturating at `u128::MAX`.
    pub fn cardinality(&self) -> u128 {
        match &self.kind {
            ClassKind::TopK { arms, size } => binomial_u128(*arms, *size),
            ClassKind::DisjSet { arms, size } => (arms / size) as u128,
            ClassKind::Matching { side } => {
                (1..=*side as u128).try_fold(1u128, |acc, i| acc.checked_mul(i)).unwrap_or(u128::MAX)
            }
            ClassKind::Biclique { arms, size } => {
                let (n, r) = (exact_sqrt(*arms).unwrap(), exact_sqrt(*size).unwrap());
                let c = binomial_u128(n, r);
                c.saturating_mul(c)
            }
            ClassKind::Explicit { members } => members.len() as u128,
        }
    }

    fn check_cost(&self, c: &[f64]) -> Result<()> {
        check_len(self.arms, c.len())?;
        if let Some(pos) = c.iter().position(|x| !x.is_finite()) {
            return Err(CpeError::Domain(format!("cost entry {pos} is not finite")));
        }
        Ok(())
    }

    /// `argmax_{v ∈ V} ⟨v, c⟩`.
    pub fn oracle(&self, c: &[f64]) -> Result<Hypothesis> {
        self.check_cost(c)?;
        if !self.supports_oracle() {
            return Err(CpeError::UnsupportedOracle(self.name()));
        }
        let fixed = vec![None; self.arms];
        Ok(self.solve_fixed(c, &fixed).expect("unconstrained problem is feasible"))
    }

    /// `argmax {⟨v, c⟩ : v ∈ V, v(arm) = bit}`, or `None` when that face is empty.
    pub fn constrained_oracle(&self, c: &[f64], arm: usize, bit: u8) -> Result<Option<Hypothesis>> {
        self.check_cost(c)?;
        self.check_constraint(arm, bit)?;
        if !self.supports_oracle() {
            return Err(CpeError::UnsupportedOracle(self.name()));
        }
        let mut fixed = vec![None; self.arms];
        fixed[arm] = Some(bit);
        Ok(self.solve_fixed(c, &fixed))
    }

    /// Like [`oracle`](Self::oracle), falling back to exhaustive search for
    /// families without one.
    pub fn maximize(&self, c: &[f64]) -> Result<Hypothesis> {
        if self.supports_oracle() {
            return self.oracle(c);
        }
        self.check_cost(c)?;
        Ok(argmax_over(self.enumerate()?.iter(), c).expect("class is nonempty"))
    }

    /// Like [`constrained_oracle`](Self::constrained_oracle), with the same fallback.
    pub fn maximize_constrained(&self, c: &[f64], arm: usize, bit: u8) -> Result<Option<Hypothesis>> {
        if self.supports_oracle() {
            return self.constrained_oracle(c, arm, bit);
        }
        self.check_cost(c)?;
        self.check_constraint(arm, bit)?;
        let members = self.enumerate()?;
        Ok(argmax_over(members.iter().filter(|v| v.bits()[arm] == bit), c))
    }

    fn check_constraint(&self, arm: usize, bit: u8) -> Result<()> {
        if arm >= self.arms {
            return Err(CpeError::Domain(format!("arm {arm} out of range for {} arms", self.arms)));
        }
        if bit > 1 {
            return Err(CpeError::Domain(format!("constraint value {bit} is not binary")));
        }
        Ok(())
    }

    /// All members in lexicographic order. Computed once and cached.
    pub fn enumerate(&self) -> Result<&[Hypothesis]> {
        self.members
            .get_or_init(|| {
                let count = self.cardinality();
                if count > self.cap as u128 {
                    return Err(CpeError::TooLarge { count, cap: self.cap });
                }
                let mut all = self.generate();
                all.sort();
                Ok(all)
            })
            .as_ref()
            .map(Vec::as_slice)
            .map_err(Clone::clone)
    }

    pub fn contains(&self, v: &Hypothesis) -> bool {
        if v.arms() != self.arms {
            return false;
        }
        let bits = v.bits();
        match &self.kind {
            ClassKind::TopK { size, .. } => v.size() == *size,
            ClassKind::DisjSet { arms, size } => {
                (0..arms / size).any(|blk| bits.iter().enumerate().all(|(a, &b)| (b == 1) == (a / size == blk)))
            }
            ClassKind::Matching { side } => {
                let n = *side;
                (0..n).all(|i| (0..n).filter(|&j| bits[i * n + j] == 1).count() == 1)
                    && (0..n).all(|j| (0..n).filter(|&i| bits[i * n + j] == 1).count() == 1)
            }
            ClassKind::Biclique { arms, size } => {
                let (n, r) = (exact_sqrt(*arms).unwrap(), exact_sqrt(*size).unwrap());
                let rows: Vec<usize> = (0..n).filter(|&i| (0..n).any(|j| bits[i * n + j] == 1)).collect();
                let cols: Vec<usize> = (0..n).filter(|&j| (0..n).any(|i| bits[i * n + j] == 1)).collect();
                rows.len() == r
                    && cols.len() == r
                    && v.size() == r * r
                    && rows.iter().all(|&i| cols.iter().all(|&j| bits[i * n + j] == 1))
            }
            ClassKind::Explicit { members } => members.binary_search(v).is_ok(),
        }
    }

    fn generate(&self) -> Vec<Hypothesis> {
        let k = self.arms;
        match &self.kind {
            ClassKind::TopK { arms, size } => combinations(*arms, *size)
                .into_iter()
                .map(|c| Hypothesis::from_members(k, &c).unwrap())
                .collect(),
            ClassKind::DisjSet { arms, size } => (0..arms / size)
                .map(|blk| Hypothesis::from_members(k, &(blk * size..(blk + 1) * size).collect::<Vec<_>>()).unwrap())
                .collect(),
            ClassKind::Matching { side } => {
                let n = *side;
                permutations(n)
                    .into_iter()
                    .map(|p| {
                        let edges: Vec<usize> = p.iter().enumerate().map(|(i, &j)| i * n + j).collect();
                        Hypothesis::from_members(k, &edges).unwrap()
                    })
                    .collect()
            }
            ClassKind::Biclique { arms, size } => {
                let (n, r) = (exact_sqrt(*arms).unwrap(), exact_sqrt(*size).unwrap());
                let subsets = combinations(n, r);
                let mut out = Vec::with_capacity(subsets.len() * subsets.len());
                for rows in &subsets {
                    for cols in &subsets {
                        let edges: Vec<usize> =
                            rows.iter().flat_map(|&i| cols.iter().map(move |&j| i * n + j)).collect();
                        out.push(Hypothesis::from_members(k, &edges).unwrap());
                    }
                }
                out
            }
            ClassKind::Explicit { members } => members.clone(),
        }
    }

    /// Lexicographically smallest maximizer subject to per-arm fixings.
    fn solve_fixed(&self, c: &[f64], fixed: &[Option<u8>]) -> Option<Hypothesis> {
        match &self.kind {
            ClassKind::TopK { size, .. } => top_k_fixed(c, *size, fixed),
            ClassKind::DisjSet { arms, size } => disj_set_fixed(c, *arms, *size, fixed),
            ClassKind::Matching { side } => matching_lex(c, *side, fixed),
            ClassKind::Biclique { .. } => {
                let members = self.enumerate().ok()?;
                argmax_over(members.iter().filter(|v| consistent(v, fixed)), c)
            }
            ClassKind::Explicit { members } => argmax_over(members.iter().filter(|v| consistent(v, fixed)), c),
        }
    }
}

fn consistent(v: &Hypothesis, fixed: &[Option<u8>]) -> bool {
    v.bits().iter().zip(fixed).all(|(&b, f)| f.is_none_or(|f| f == b))
}

/// First maximizer in iteration order; callers pass lexicographically sorted input.
pub(crate) fn argmax_over<'a>(members: impl Iterator<Item = &'a Hypothesis>, c: &[f64]) -> Option<Hypothesis> {
    let mut best: Option<(&Hypothesis, f64)> = None;
    for v in members {
        let val = v.value_unchecked(c);
        if best.is_none_or(|(_, b)| val > b) {
            best = Some((v, val));
        }
    }
    best.map(|(v, _)| v.clone())
}

fn top_k_fixed(c: &[f64], size: usize, fixed: &[Option<u8>]) -> Option<Hypothesis> {
    let forced = fixed.iter().filter(|f| **f == Some(1)).count();
    if forced > size {
        return None;
    }
    let mut free: Vec<usize> = (0..c.len()).filter(|&a| fixed[a].is_none()).collect();
    let need = size - forced;
    if free.len() < need {
        return None;
    }
    // Larger cost first; among equal costs the higher index wins, which keeps
    // the earlier bits at zero.
    free.sort_by(|&a, &b| c[b].total_cmp(&c[a]).then(b.cmp(&a)));
    let mut bits: Vec<u8> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
    for &a in &free[..need] {
        bits[a] = 1;
    }
    Some(Hypothesis::from_bits_unchecked(bits))
}

fn disj_set_fixed(c: &[f64], arms: usize, size: usize, fixed: &[Option<u8>]) -> Option<Hypothesis> {
    let mut best: Option<(usize, f64)> = None;
    for blk in 0..arms / size {
        let ok = fixed
            .iter()
            .enumerate()
            .all(|(a, f)| f.is_none_or(|f| (f == 1) == (a / size == blk)));
        if !ok {
            continue;
        }
        let val: f64 = c[blk * size..(blk + 1) * size].iter().sum();
        // Later blocks are lexicographically smaller, so ties move forward.
        if best.is_none_or(|(_, b)| val >= b) {
            best = Some((blk, val));
        }
    }
    best.map(|(blk, _)| {
        let mut bits = vec![0; arms];
        bits[blk * size..(blk + 1) * size].fill(1);
        Hypothesis::from_bits_unchecked(bits)
    })
}

/// Some maximizing perfect matching under the fixings, via the Hungarian method.
fn matching_any(c: &[f64], n: usize, fixed: &[Option<u8>]) -> Option<Hypothesis> {
    let mut row_taken = vec![false; n];
    let mut col_taken = vec![false; n];
    let mut bits = vec![0u8; n * n];
    for (a, f) in fixed.iter().enumerate() {
        if *f == Some(1) {
            let (i, j) = (a / n, a % n);
            if row_taken[i] || col_taken[j] {
                return None;
            }
            row_taken[i] = true;
            col_taken[j] = true;
            bits[a] = 1;
        }
    }
    let rows: Vec<usize> = (0..n).filter(|&i| !row_taken[i]).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| !col_taken[j]).collect();
    let cost: Vec<Vec<f64>> = rows
        .iter()
        .map(|&i| {
            cols.iter()
                .map(|&j| if fixed[i * n + j] == Some(0) { f64::INFINITY } else { -c[i * n + j] })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost)?;
    for (p, q) in assignment.into_iter().enumerate() {
        bits[rows[p] * n + cols[q]] = 1;
    }
    Some(Hypothesis::from_bits_unchecked(bits))
}

/// Refines the Hungarian optimum to the lexicographically smallest maximizer
/// by fixing arms to 0 greedily while the optimum value is preserved.
fn matching_lex(c: &[f64], n: usize, fixed: &[Option<u8>]) -> Option<Hypothesis> {
    let best = matching_any(c, n, fixed)?.value_unchecked(c);
    let tol = 1e-12 * (1.0 + best.abs());
    let mut fixed = fixed.to_vec();
    let mut last = None;
    for a in 0..n * n {
        if fixed[a].is_some() {
            continue;
        }
        fixed[a] = Some(0);
        match matching_any(c, n, &fixed) {
            Some(v) if v.value_unchecked(c) >= best - tol => last = Some(v),
            _ => fixed[a] = Some(1),
        }
    }
    last.filter(|v| consistent(v, &fixed))
        .or_else(|| matching_any(c, n, &fixed))
}

pub(crate) fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}
