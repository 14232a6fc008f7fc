//! Scalar abstraction for the analytic layer.
//!
//! The estimators only need ordered floating-point arithmetic, so they are
//! written against [`Scalar`] and instantiate at `f32` or `f64`. The
//! simulation layer (complex matrices, eigensolver) stays concrete `f64`.

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used throughout the spectrum/estimation layer.
pub trait Scalar:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

/// Lossy cast from `f64` into the working scalar.
#[inline]
pub fn cast<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 representable in scalar type")
}

/// Numerically stable `log(Σ exp(x_i) / len)` with a max shift.
///
/// `-inf` entries are legal and contribute nothing; the result is `-inf`
/// only when every entry is `-inf`.
pub fn log_mean_exp<F: Scalar>(values: &[F]) -> F {
    debug_assert!(!values.is_empty());
    let max = values
        .iter()
        .cloned()
        .fold(F::neg_infinity(), |a, b| if b > a { b } else { a });
    if !max.is_finite() {
        return F::neg_infinity();
    }
    let sum = values
        .iter()
        .map(|&v| (v - max).exp())
        .fold(F::zero(), |a, b| a + b);
    max + (sum / cast::<F>(values.len() as f64)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_mean_exp_matches_direct_computation() {
        let vals = [0.3f64, -1.2, 2.5];
        let direct = (vals.iter().map(|v| v.exp()).sum::<f64>() / 3.0).ln();
        assert!((log_mean_exp(&vals) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_mean_exp_ignores_neg_infinity_entries() {
        let vals = [f64::NEG_INFINITY, 1.0];
        let direct = (1.0f64.exp() / 2.0).ln();
        assert!((log_mean_exp(&vals) - direct).abs() < 1e-14);
    }

    #[test]
    fn log_mean_exp_all_neg_infinity_is_neg_infinity() {
        let vals = [f64::NEG_INFINITY; 3];
        assert_eq!(log_mean_exp(&vals), f64::NEG_INFINITY);
    }

    #[test]
    fn log_mean_exp_is_stable_for_large_magnitudes() {
        let vals = [-1e4f64, -1e4 + 1.0];
        let got = log_mean_exp(&vals);
        assert!(got.is_finite());
        let expected = -1e4 + ((1.0 + 1.0f64.exp()) / 2.0).ln();
        assert!((got - expected).abs() < 1e-10);
    }

    #[test]
    fn generic_layer_instantiates_at_f32() {
        let vals = [0.5f32, 1.5];
        assert!(log_mean_exp(&vals).is_finite());
    }
}
