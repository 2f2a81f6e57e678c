use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, NumAssign, NumCast};

/// Real scalar the numerics are written against (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + NumAssign + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("literal fits scalar type")
    }

    /// A tolerance of `x`, floored at a small multiple of machine epsilon so
    /// the same defaults stay meaningful for `f32`.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn to_c64<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64_lossy(), z.im.to_f64_lossy())
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}
