use core::fmt;

use num_traits::Float;

/// Element type of a [`crate::Tensor4`]: `f32` or `f64`, fixed at
/// construction. Reference operators always work in `f64`; `to_f64` /
/// `from_f64` bridge the two without touching the engine's arithmetic.
pub trait Scalar: Float + fmt::Debug + fmt::Display + Send + Sync + Default + 'static {
    /// Name used in reports and error messages ("f32" / "f64").
    const NAME: &'static str;
    /// Tolerance for the row-sum invariant of normalized band weights.
    const ROW_SUM_TOL: f64;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";
    const ROW_SUM_TOL: f64 = 1e-6;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";
    const ROW_SUM_TOL: f64 = 1e-12;

    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}
