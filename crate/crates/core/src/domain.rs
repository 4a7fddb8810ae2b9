//! Attribute identities, simplex-constrained preference vectors and cosine similarity.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|Σw − 1|` for simplex membership.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Number of quality attributes in the bundled scenarios.
pub const DEFAULT_ATTRIBUTES: usize = 3;

/// 1-based index of a quality attribute.
///
/// For the three-attribute scenarios the canonical order is
/// road condition, efficiency, aesthetic appeal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeId(usize);

impl AttributeId {
    pub const ROAD_CONDITION: AttributeId = AttributeId(1);
    pub const EFFICIENCY: AttributeId = AttributeId(2);
    pub const AESTHETIC_APPEAL: AttributeId = AttributeId(3);

    pub fn new(index: usize, n: usize) -> Result<Self> {
        if index == 0 || index > n {
            return Err(Error::UnknownAttribute(index));
        }
        Ok(AttributeId(index))
    }

    /// Builds an id from a 0-based position.
    pub fn from_position(pos: usize) -> Self {
        AttributeId(pos + 1)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn position(self) -> usize {
        self.0 - 1
    }

    pub fn name(self) -> &'static str {
        match self.0 {
            1 => "road_condition",
            2 => "efficiency",
            3 => "aesthetic_appeal",
            _ => "attribute",
        }
    }
}

impl fmt::Display for AttributeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    /// Validates `weights` against the simplex invariants.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::TooFewWeights(weights.len()));
        }
        for (index, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE || weights.iter().any(|&w| w > 1.0 + SUM_TOLERANCE) {
            return Err(Error::SumNotOne { sum });
        }
        Ok(PreferenceVector(weights))
    }

    /// Rescales a nonnegative, nonzero vector onto the simplex.
    pub fn normalized(raw: &[f64]) -> Result<Self> {
        for (index, &value) in raw.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::NegativeWeight { index, value });
            }
        }
        let sum: f64 = raw.iter().sum();
        if sum <= 0.0 {
            return Err(Error::SumNotOne { sum });
        }
        Self::new(raw.iter().map(|w| w / sum).collect())
    }

    /// Equal weights, with the rounding remainder on the last attribute
    /// (⟨0.333, 0.333, 0.334⟩ for three attributes).
    pub fn study_baseline(n: usize) -> Self {
        let share = 1000 / n;
        let mut w = vec![share as f64 / 1000.0; n];
        w[n - 1] = (1000 - share * (n - 1)) as f64 / 1000.0;
        PreferenceVector(w)
    }

    /// Uniform sample from the probability simplex (sorted-uniform spacings).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut cuts: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        cuts.sort_by(f64::total_cmp);
        let mut w = Vec::with_capacity(n);
        let mut prev = 0.0;
        for c in cuts {
            w.push(c - prev);
            prev = c;
        }
        w.push(1.0 - prev);
        PreferenceVector(w)
    }

    /// Wraps weights already known to satisfy the invariants (debug-checked).
    pub(crate) fn from_trusted(weights: Vec<f64>) -> Self {
        debug_assert!(Self::new(weights.clone()).is_ok(), "off-simplex: {weights:?}");
        PreferenceVector(weights)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn weight(&self, attr: AttributeId) -> f64 {
        self.0[attr.position()]
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.0.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    /// True when all weights are in `[0, 1]` and the sum is within tolerance.
    pub fn is_on_simplex(weights: &[f64]) -> bool {
        weights.iter().all(|&w| (0.0..=1.0).contains(&w))
            && (weights.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        PreferenceVector::new(value)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

impl fmt::Display for PreferenceVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "⟨")?;
        for (i, w) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{w:.4}")?;
        }
        write!(f, "⟩")
    }
}

/// Cosine of the angle between two preference vectors; in `[0, 1]` on the simplex.
pub fn cos_sim(p: &PreferenceVector, q: &PreferenceVector) -> f64 {
    let denom = p.norm() * q.norm();
    (p.dot(q.weights()) / denom).clamp(0.0, 1.0)
}
