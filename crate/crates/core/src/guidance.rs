//! Per-pixel guidance ("luma") used as the grid's depth coordinate.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Maps an RGB color to a depth coordinate in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum GuidanceCurve {
    /// Rec.601 luma, clamped to `[0, 1]`.
    #[default]
    FixedLuma,
    /// Piecewise-linear curve applied to the Rec.601 luma. Knots are sampled
    /// uniformly over `[0, 1]`.
    PiecewiseLinearLut(Vec<f32>),
}

impl GuidanceCurve {
    pub fn lut(knots: Vec<f32>) -> Result<Self> {
        let curve = GuidanceCurve::PiecewiseLinearLut(knots);
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if let GuidanceCurve::PiecewiseLinearLut(knots) = self {
            if knots.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "guidance LUT needs at least 2 knots, got {}",
                    knots.len()
                )));
            }
            if knots.iter().any(|k| !k.is_finite()) {
                return Err(Error::NonFinite("guidance LUT knots".into()));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval<T: Scalar>(&self, r: T, g: T, b: T) -> T {
        let luma = T::of(LUMA_WEIGHTS[0]) * r + T::of(LUMA_WEIGHTS[1]) * g + T::of(LUMA_WEIGHTS[2]) * b;
        let luma = clamp01(luma);
        match self {
            GuidanceCurve::FixedLuma => luma,
            GuidanceCurve::PiecewiseLinearLut(knots) => {
                let segments = knots.len() - 1;
                let pos = luma * T::of(segments as f64);
                let i = pos.floor().to_usize().unwrap_or(0).min(segments - 1);
                let f = pos - T::of(i as f64);
                let k0 = T::of(knots[i] as f64);
                let k1 = T::of(knots[i + 1] as f64);
                clamp01(k0 + f * (k1 - k0))
            }
        }
    }
}

#[inline(always)]
fn clamp01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}
