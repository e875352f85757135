//! Scalar abstraction shared by every numeric module.
//!
//! All physics is written against [`Real`], so the same code runs in `f32`,
//! `f64`, or quad precision (`f128`, behind the `quad` feature). Frequencies
//! are ordinary frequencies in hertz throughout; every formula only ever sees
//! ratios `ω/σ` or products `ω·Δ/c`, so the convention cancels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the simulator.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Speed of light in vacuum, m/s (exact by definition of the metre).
pub const SPEED_OF_LIGHT_MPS: f64 = 299_792_458.0;

/// Lifts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in target scalar")
}

#[inline]
pub fn speed_of_light<T: Real>() -> T {
    lit(SPEED_OF_LIGHT_MPS)
}

/// Lossy conversion to `f64` for reporting and sampling.
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `sqrt(1 + y) - 1` without cancellation for small `y`.
#[inline]
pub fn sqrt1p_m1<T: Real>(y: T) -> T {
    y / ((T::one() + y).sqrt() + T::one())
}

/// `1 - sqrt(1 - d)` without cancellation for small `d`.
#[inline]
pub fn one_minus_sqrt1m<T: Real>(d: T) -> T {
    d / (T::one() + (T::one() - d).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_argument_helpers_keep_digits() {
        let y = 1e-12_f64;
        // series: y/2 - y²/8 and y/2 + y²/8
        assert!((sqrt1p_m1(y) - (5e-13 - 1.25e-25)).abs() < 1e-28);
        assert!((one_minus_sqrt1m(y) - (5e-13 + 1.25e-25)).abs() < 1e-28);
        assert_eq!(sqrt1p_m1(0.0_f64), 0.0);
        assert!((sqrt1p_m1(3.0_f64) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn works_in_single_precision() {
        let c: f32 = speed_of_light();
        assert_eq!(c, 299_792_458.0_f32);
        assert!((one_minus_sqrt1m(0.75_f32) - 0.5).abs() < 1e-7);
    }
}

#[cfg(all(test, feature = "quad"))]
mod quad_tests {
    use super::*;
    #[test]
    fn quad_is_real() {
        fn probe<T: Real>() -> T {
            sqrt1p_m1(lit::<T>(1e-20))
        }
        let q: crate::Quad = probe();
        assert!((to_f64(q) - 5e-21).abs() < 1e-35);
        let tiny = lit::<crate::Quad>(1.0) + lit::<crate::Quad>(1e-25);
        assert!(tiny > lit(1.0));
    }
}
