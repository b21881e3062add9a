//! Scalar abstraction shared by every numeric module.

use nalgebra::RealField;
use num_traits::FromPrimitive;

/// Real scalar usable by the geometry, dynamics, barrier and QP code.
///
/// Implemented for `f32` and `f64`. Constants are written as `f64`
/// literals and converted with [`Real::lit`].
pub trait Real: RealField + Copy + FromPrimitive {
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Machine epsilon of the concrete type.
    fn eps() -> Self {
        Self::default_epsilon()
    }

    fn is_finite_value(self) -> bool {
        self.is_finite()
    }
}

impl Real for f32 {}
impl Real for f64 {}
