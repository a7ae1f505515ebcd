use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar type the estimators are generic over (`f32` or `f64`).
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync + std::fmt::Display + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}
