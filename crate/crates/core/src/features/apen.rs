use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::num::{self, Scalar};

/// Embedding length and match tolerance for approximate entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApEnParams<T> {
    pub m: usize,
    pub r: T,
}

impl<T: Scalar> ApEnParams<T> {
    pub fn new(m: usize, r: T) -> Result<Self, FeatureError> {
        let p = Self { m, r };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), FeatureError> {
        if self.m < 1 {
            return Err(FeatureError::Argument("ApEn embedding length m must be >= 1".into()));
        }
        if !(self.r.is_finite() && self.r > T::zero()) {
            return Err(FeatureError::Argument(format!("ApEn tolerance r must be positive, got {}", self.r)));
        }
        Ok(())
    }
}

/// How the ApEn tolerance is chosen for a series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tolerance {
    Absolute(f64),
    /// Multiple of the series' population standard deviation.
    StdFraction(f64),
}

impl Tolerance {
    /// Resolves to a concrete `r`; `None` when the series has zero spread.
    pub fn resolve<T: Scalar>(self, series: &[T]) -> Option<T> {
        match self {
            Tolerance::Absolute(r) => Some(T::lit(r)),
            Tolerance::StdFraction(k) => {
                let sd = num::std_dev(series)?;
                (sd > T::zero()).then(|| T::lit(k) * sd)
            }
        }
    }
}

/// Approximate entropy `Phi^m(r) - Phi^(m+1)(r)` with Chebyshev template
/// distance and self-matches counted.
///
/// Both template lengths are counted in a single pass over pairs `i < j`:
/// an `(m+1)`-match is an `m`-match whose next element also lies within `r`.
pub fn approximate_entropy<T: Scalar>(x: &[T], p: &ApEnParams<T>) -> Result<T, FeatureError> {
    p.check()?;
    let n = x.len();
    let m = p.m;
    if n < m + 2 {
        return Err(FeatureError::InsufficientData { what: "approximate entropy".into(), needed: m + 2, have: n });
    }
    let r = p.r;
    let n_m = n - m + 1;
    let n_m1 = n - m;
    let mut c_m = vec![1usize; n_m];
    let mut c_m1 = vec![1usize; n_m1];
    for i in 0..n_m {
        for j in (i + 1)..n_m {
            if (0..m).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                c_m[i] += 1;
                c_m[j] += 1;
                if j < n_m1 && (x[i + m] - x[j + m]).abs() <= r {
                    c_m1[i] += 1;
                    c_m1[j] += 1;
                }
            }
        }
    }
    let phi = |counts: &[usize]| {
        let total = T::from_count(counts.len());
        let sum = counts
            .iter()
            .fold(T::zero(), |acc, &c| acc + (T::from_count(c) / total).ln());
        sum / total
    };
    Ok(phi(&c_m) - phi(&c_m1))
}
