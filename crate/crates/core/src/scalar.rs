//! Scalar abstraction for the cost arithmetic: f32 or f64.

use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the cost model.
///
/// Blanket-implemented for `f32` and `f64`. Derivation subtracts reciprocals
/// of near-equal throughputs, so `f64` is the shipped default everywhere; the
/// generic bound exists so the math stays type-agnostic.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

/// Lossless-enough conversion from `f64` literals into the working scalar.
#[inline]
pub fn from_f64<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Conversion to `f64` for error payloads and display.
#[inline]
pub fn to_f64<F: Scalar>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Median of a finite, non-empty slice; even counts average the two middle
/// values. Returns `None` for empty input or any non-finite element.
pub(crate) fn median<F: Scalar>(values: &[F]) -> Option<F> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values compare"));
    let n = sorted.len();
    let mid = n / 2;
    if n % 2 == 1 {
        Some(sorted[mid])
    } else {
        Some((sorted[mid - 1] + sorted[mid]) / from_f64(2.0))
    }
}
