//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the analytics, integrators and estimators are written against.
///
/// Implemented for `f32` and `f64`. Everything that touches files or the
/// command line works in `f64`; see the aliases at the crate root.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Literals in this crate are always representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `(1 - exp(-k s)) / k`, i.e. `∫_0^s exp(-k t) dt`, continuous through `k = 0`.
    #[inline]
    fn exp_integral(k: Self, s: Self) -> Self {
        if k == Self::zero() {
            s
        } else {
            -(-k * s).exp_m1() / k
        }
    }

    /// Machine-precision aware relative tolerance used by tests and degeneracy checks.
    #[inline]
    fn rel_eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}
