//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar (`f32` or `f64`) the simulators are generic over.
///
/// The tolerance hooks let invariant checks scale with the precision of the
/// underlying type: `f64` uses the tight thresholds, `f32` looser ones.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for construction-time invariants (norm, trace, Hermiticity).
    fn invariant_tol() -> Self;

    /// Slack allowed below zero for the smallest eigenvalue of a density matrix.
    fn psd_slack() -> Self;

    /// Tolerance used when checking unitarity of gate matrices.
    fn unitary_tol() -> Self;

    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn invariant_tol() -> Self {
        1e-9
    }
    fn psd_slack() -> Self {
        1e-7
    }
    fn unitary_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn invariant_tol() -> Self {
        1e-4
    }
    fn psd_slack() -> Self {
        1e-3
    }
    fn unitary_tol() -> Self {
        1e-5
    }
}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

#[cfg(test)]
pub(crate) fn c<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

/// `e^{i·phase}`.
#[inline]
pub(crate) fn cis<T: Real>(phase: T) -> C<T> {
    Complex::new(phase.cos(), phase.sin())
}
