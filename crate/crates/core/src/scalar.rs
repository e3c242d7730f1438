//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the algorithms are generic over (`f32` or `f64`).
///
/// Complex entries are `num_complex::Complex<T>`. Tolerances are specified in
/// `f64` and converted with [`Real::lit`]; with `f32` they should be loosened
/// accordingly since the defaults assume double precision.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + 'static {
    /// Converts an `f64` literal into this type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion back to `f64`, used for reporting and JSON.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn is_finite_value(self) -> bool {
        self.to_f64().is_some_and(f64::is_finite)
    }
}

impl Real for f32 {}
impl Real for f64 {}
