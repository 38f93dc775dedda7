use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for images and grids.
///
/// Rendering runs in `f32`; gradient checks and the least-squares fit run in
/// `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Send + Sync + 'static
{
    fn of(v: f64) -> Self;

    fn to_f64_lossless(self) -> f64;

    /// Truncating conversion for values already clamped to `[0, usize::MAX]`.
    fn trunc_index(self) -> usize;
}

impl Scalar for f32 {
    #[inline(always)]
    fn trunc_index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn of(v: f64) -> Self {
        v as f32
    }

    #[inline(always)]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    #[inline(always)]
    fn trunc_index(self) -> usize {
        self as usize
    }

    #[inline(always)]
    fn of(v: f64) -> Self {
        v
    }

    #[inline(always)]
    fn to_f64_lossless(self) -> f64 {
        self
    }
}
