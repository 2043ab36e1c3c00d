//! Scalar abstraction shared by the probability engine and the FM engine.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, One, Signed, ToPrimitive, Zero};

/// Floating-point type a [`JointPmf`](crate::prob::JointPmf) can be stored in.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + Sum + 'static
{
    /// Total-mass drift accepted as-is on construction.
    fn norm_tol() -> Self;
    /// Largest drift that is silently renormalized; anything above is rejected.
    fn renorm_tol() -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn norm_tol() -> Self {
        1e-12
    }
    fn renorm_tol() -> Self {
        1e-9
    }
}

impl Real for f32 {
    fn norm_tol() -> Self {
        1e-6
    }
    fn renorm_tol() -> Self {
        1e-4
    }
}

/// Coefficient ring for linear inequality systems.
///
/// Fourier-Motzkin multiplies and adds coefficients repeatedly, so the
/// default instantiation is an exact rational; `f64` is available for
/// comparison runs.
pub trait Coefficient:
    Clone
    + PartialEq
    + Debug
    + Display
    + Send
    + Sync
    + Zero
    + One
    + Signed
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    fn to_f64(&self) -> f64;
    /// Best-effort conversion used when reading systems from JSON.
    fn from_f64(x: f64) -> Option<Self>;
    fn from_i64(x: i64) -> Self;
    /// `self / other`; `other` is never zero at call sites.
    fn ratio(&self, other: &Self) -> Self;
    fn is_integer(&self) -> bool;
    /// Textual form accepted back by [`Coefficient::parse`].
    fn render(&self) -> String {
        self.to_string()
    }
    fn parse(s: &str) -> Option<Self>;
}

impl Coefficient for Rational64 {
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn from_f64(x: f64) -> Option<Self> {
        if x.fract() == 0.0 && x.abs() < 1e15 {
            return Some(Rational64::from_integer(x as i64));
        }
        Rational64::approximate_float(x)
    }
    fn from_i64(x: i64) -> Self {
        Rational64::from_integer(x)
    }
    fn ratio(&self, other: &Self) -> Self {
        self / other
    }
    fn is_integer(&self) -> bool {
        Rational64::is_integer(self)
    }
    fn parse(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Coefficient for f64 {
    fn to_f64(&self) -> f64 {
        *self
    }
    fn from_f64(x: f64) -> Option<Self> {
        x.is_finite().then_some(x)
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn ratio(&self, other: &Self) -> Self {
        self / other
    }
    fn is_integer(&self) -> bool {
        self.fract() == 0.0
    }
    fn parse(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}
