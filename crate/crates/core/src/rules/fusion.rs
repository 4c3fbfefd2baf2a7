use std::collections::BTreeMap;

use num_traits::Num;
use thiserror::Error;

use super::{FatigueLevel, FatigueSource, Levels};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("no fatigue levels to fuse")]
    EmptyInput,
    #[error("invalid fusion weights: {0}")]
    InvalidWeights(String),
    #[error("present sources carry zero total weight")]
    ZeroWeight,
    #[error("invalid fusion cutoffs: need 0 < medium < high <= 2")]
    InvalidCutoffs,
}

/// Non-negative per-source weights with at least one positive entry.
/// Sources without an entry weigh zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionWeights<T> {
    weights: BTreeMap<FatigueSource, T>,
}

impl<T: Num + Copy + PartialOrd> FusionWeights<T> {
    pub fn new(weights: BTreeMap<FatigueSource, T>) -> Result<Self, FusionError> {
        if weights.contains_key(&FatigueSource::Overall) {
            return Err(FusionError::InvalidWeights("`overall` cannot carry a weight".into()));
        }
        // `w != w` rejects NaN for float scalars
        #[allow(clippy::eq_op)]
        if weights.values().any(|&w| w < T::zero() || w != w) {
            return Err(FusionError::InvalidWeights("weights must be non-negative".into()));
        }
        if !weights.values().any(|&w| w > T::zero()) {
            return Err(FusionError::InvalidWeights("at least one weight must be positive".into()));
        }
        Ok(Self { weights })
    }

    /// Weight one for every sub-source.
    pub fn equal() -> Self {
        Self { weights: FatigueSource::SUB_SOURCES.into_iter().map(|s| (s, T::one())).collect() }
    }

    pub fn get(&self, source: FatigueSource) -> T {
        self.weights.get(&source).copied().unwrap_or_else(T::zero)
    }

    pub fn as_map(&self) -> &BTreeMap<FatigueSource, T> {
        &self.weights
    }

    /// Every weight multiplied by `k`.
    pub fn scaled(&self, k: T) -> Result<Self, FusionError> {
        Self::new(self.weights.iter().map(|(&s, &w)| (s, w * k)).collect())
    }
}

/// Score thresholds: Medium from `medium`, High from `high`, both inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionCutoffs<T> {
    pub medium: T,
    pub high: T,
}

impl<T: Num + Copy + PartialOrd> FusionCutoffs<T> {
    pub fn new(medium: T, high: T) -> Result<Self, FusionError> {
        let two = T::one() + T::one();
        if medium > T::zero() && medium < high && high <= two {
            Ok(Self { medium, high })
        } else {
            Err(FusionError::InvalidCutoffs)
        }
    }

    pub fn classify(&self, score: T) -> FatigueLevel {
        if score >= self.high {
            FatigueLevel::High
        } else if score >= self.medium {
            FatigueLevel::Medium
        } else {
            FatigueLevel::Low
        }
    }
}

impl<T: Num + Copy + PartialOrd> Default for FusionCutoffs<T> {
    /// Midpoints of the level encoding, 1/2 and 3/2.
    fn default() -> Self {
        let half = T::one() / (T::one() + T::one());
        Self { medium: half, high: T::one() + half }
    }
}

fn encode<T: Num>(level: FatigueLevel) -> T {
    match level {
        FatigueLevel::Low => T::zero(),
        FatigueLevel::Medium => T::one(),
        FatigueLevel::High => T::one() + T::one(),
    }
}

/// Weighted mean of encoded sub-source levels, banded by `cutoffs`.
/// Returns the Overall level and the score. An `Overall` entry in `levels`
/// is ignored.
pub fn fuse<T: Num + Copy + PartialOrd>(
    levels: &Levels,
    weights: &FusionWeights<T>,
    cutoffs: &FusionCutoffs<T>,
) -> Result<(FatigueLevel, T), FusionError> {
    let present: Vec<_> = levels.iter().filter(|(s, _)| **s != FatigueSource::Overall).collect();
    if present.is_empty() {
        return Err(FusionError::EmptyInput);
    }
    let (num, den) = present.iter().fold((T::zero(), T::zero()), |(n, d), (&s, &l)| {
        let w = weights.get(s);
        (n + w * encode::<T>(l), d + w)
    });
    if den == T::zero() {
        return Err(FusionError::ZeroWeight);
    }
    let score = num / den;
    Ok((cutoffs.classify(score), score))
}
