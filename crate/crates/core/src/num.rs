//! Scalar abstraction shared by the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar accepted by the feature kernels, band sets and fusion.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every implementor can represent (or round) any `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(T::zero(), |acc, &x| acc + x);
    Some(sum / T::from_count(xs.len()))
}

/// Population variance (divides by N).
pub fn variance<T: Scalar>(xs: &[T]) -> Option<T> {
    let m = mean(xs)?;
    let ss = xs.iter().fold(T::zero(), |acc, &x| acc + (x - m) * (x - m));
    Some(ss / T::from_count(xs.len()))
}

/// Population standard deviation.
pub fn std_dev<T: Scalar>(xs: &[T]) -> Option<T> {
    variance(xs).map(Float::sqrt)
}

pub fn max<T: Scalar>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::max)
}

pub fn min<T: Scalar>(xs: &[T]) -> Option<T> {
    xs.iter().copied().reduce(T::min)
}

/// Median of a slice (average of the middle pair for even lengths).
pub fn median<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        Some(sorted[mid])
    } else {
        Some((sorted[mid - 1] + sorted[mid]) / T::lit(2.0))
    }
}
