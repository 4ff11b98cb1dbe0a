use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar used throughout the model, sampler and estimator.
///
/// Implemented for `f32` and `f64`. Everything numeric in this crate is
/// written against this trait; the crate root exposes `f64` aliases for the
/// common case.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`; panics only for unrepresentable values,
    /// which cannot happen for `f32`/`f64`.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 representable in scalar type")
    }

    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable logistic function `1 / (1 + exp(-x))`.
#[inline]
pub fn logistic<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-odds of a probability.
#[inline]
pub fn logit<T: Scalar>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logistic_is_symmetric_and_bounded() {
        for &x in &[-800.0f64, -30.0, -1.4, 0.0, 0.3, 30.0, 800.0] {
            let p = logistic(x);
            assert!((0.0..=1.0).contains(&p));
            assert!((p + logistic(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(logistic(0.0f32), 0.5);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &x in &[-20.0f64, -1.0, 0.0, 2.5, 20.0] {
            let naive = (1.0 + x.exp()).ln();
            assert!((softplus(x) - naive).abs() < 1e-12);
        }
        assert!((softplus(1000.0f64) - 1000.0).abs() < 1e-12);
    }

    #[test]
    fn logit_inverts_logistic() {
        assert!((logit(0.2f64) - (-1.3862943611198906)).abs() < 1e-15);
        assert!((logistic(logit(0.37f64)) - 0.37).abs() < 1e-15);
    }
}
