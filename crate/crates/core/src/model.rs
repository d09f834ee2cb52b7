//! Shared value types: binary hypotheses over `K` arms, mean vectors and
//! fractional points of the convex hull.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, CpeError, Result};

/// A candidate subset of arms, stored as a dense 0/1 indicator vector.
///
/// The derived ordering is lexicographic on the bits, which is the
/// tie-breaking order used by every oracle in this crate.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct Hypothesis(Vec<u8>);

impl Hypothesis {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(CpeError::Domain(format!(
                "hypothesis entry {pos} is {}, expected 0 or 1",
                bits[pos]
            )));
        }
        Ok(Self(bits))
    }

    pub fn zeros(arms: usize) -> Self {
        Self(vec![0; arms])
    }

    /// Builds the indicator of `members` over `arms` arms.
    pub fn from_members(arms: usize, members: &[usize]) -> Result<Self> {
        let mut bits = vec![0; arms];
        for &a in members {
            if a >= arms {
                return Err(CpeError::Domain(format!("arm {a} out of range for {arms} arms")));
            }
            bits[a] = 1;
        }
        Ok(Self(bits))
    }

    pub(crate) fn from_bits_unchecked(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }

    pub fn arms(&self) -> usize {
        self.0.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn contains(&self, arm: usize) -> bool {
        self.0[arm] == 1
    }

    pub fn size(&self) -> usize {
        self.0.iter().map(|&b| b as usize).sum()
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b == 1).map(|(a, _)| a)
    }

    /// Size of the symmetric set difference.
    pub fn distance(&self, other: &Hypothesis) -> Result<usize> {
        check_len(self.arms(), other.arms())?;
        Ok(self.distance_unchecked(other))
    }

    pub(crate) fn distance_unchecked(&self, other: &Hypothesis) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    /// `⟨v, m⟩`, the collective mean of the subset under `m`.
    pub fn value(&self, m: &[f64]) -> Result<f64> {
        check_len(self.arms(), m.len())?;
        Ok(self.value_unchecked(m))
    }

    pub(crate) fn value_unchecked(&self, m: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(m)
            .filter(|(&b, _)| b == 1)
            .map(|(_, &x)| x)
            .sum()
    }

    /// Arms on which `self` and `other` disagree.
    pub fn symmetric_difference<'a>(&'a self, other: &'a Hypothesis) -> impl Iterator<Item = usize> + 'a {
        self.0
            .iter()
            .zip(&other.0)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(i, _)| i)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&b| b as f64).collect()
    }
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hypothesis(")?;
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<u8>> for Hypothesis {
    type Error = CpeError;

    fn try_from(bits: Vec<u8>) -> Result<Self> {
        Hypothesis::new(bits)
    }
}

impl From<Hypothesis> for Vec<u8> {
    fn from(h: Hypothesis) -> Self {
        h.0
    }
}

/// Symmetric set difference `|u ⊖ v|`.
pub fn distance(u: &Hypothesis, v: &Hypothesis) -> Result<usize> {
    u.distance(v)
}

/// `⟨v, m⟩`.
pub fn set_value(v: &Hypothesis, m: &[f64]) -> Result<f64> {
    v.value(m)
}

/// Arm means. True means live in `[-1, 1]`; empirical means are unrestricted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanVector(Vec<f64>);

impl MeanVector {
    /// Ground-truth means, validated to lie in `[-1, 1]`.
    pub fn true_means(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|x| !(-1.0..=1.0).contains(x)) {
            return Err(CpeError::Domain(format!(
                "true mean of arm {pos} is {}, outside [-1, 1]",
                values[pos]
            )));
        }
        Ok(Self(values))
    }

    pub fn empirical(values: Vec<f64>) -> Self {
        Self(values)
    }

    /// The homogeneous instance `Δ(2v⋆ − 1)`.
    pub fn homogeneous(star: &Hypothesis, gap: f64) -> Result<Self> {
        Self::true_means(star.bits().iter().map(|&b| gap * (2.0 * b as f64 - 1.0)).collect())
    }

    pub fn arms(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for MeanVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A point of `[0, 1]^K`, typically an average of hypotheses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalPoint(Vec<f64>);

impl FractionalPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(pos) = coords.iter().position(|x| !(0.0..=1.0).contains(x)) {
            return Err(CpeError::Domain(format!(
                "coordinate {pos} is {}, outside [0, 1]",
                coords[pos]
            )));
        }
        Ok(Self(coords))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl From<&Hypothesis> for FractionalPoint {
    fn from(h: &Hypothesis) -> Self {
        Self(h.as_f64())
    }
}

/// `⟨x + u, 1⟩ − 2⟨x, u⟩`, which equals `‖x − u‖₁` for binary `u` and
/// `x ∈ [0, 1]^K`.
pub fn l1_linearize(x: &FractionalPoint, u: &Hypothesis) -> Result<f64> {
    check_len(x.0.len(), u.arms())?;
    let (mut sum, mut cross) = (0.0, 0.0);
    for (&xa, &ua) in x.0.iter().zip(u.bits()) {
        let ua = ua as f64;
        sum += xa + ua;
        cross += xa * ua;
    }
    Ok(sum - 2.0 * cross)
}
