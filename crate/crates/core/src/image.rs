//! Three-channel real-valued image planes.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// An H x W x 3 image, interleaved RGB, row-major. Values are nominally in
/// `[0, 1]` but out-of-range values are legal (affine transforms can leave the
/// unit cube).
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePlane<T: Scalar = f32> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Scalar> ImagePlane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::ShapeMismatch(format!(
                "{}x{}x3 image needs {} values, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image pixels".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Result<Self> {
        check_dims(width, height)?;
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [T; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    /// Wraps a buffer produced by an operator that preserves finiteness.
    pub(crate) fn from_raw(width: usize, height: usize, data: Vec<T>) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        Self {
            width,
            height,
            data,
        }
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Interleaved RGB values.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[T] {
        let stride = self.width * 3;
        &self.data[y * stride..(y + 1) * stride]
    }

    pub fn cast<U: Scalar>(&self) -> ImagePlane<U> {
        ImagePlane {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|v| U::of(v.to_f64_lossless()))
                .collect(),
        }
    }

    pub fn clamped(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .map(|&v| v.max(T::zero()).min(T::one()))
                .collect(),
        }
    }

    /// Channel `c` as a flat vector in row-major pixel order.
    pub fn channel(&self, c: usize) -> Vec<T> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    /// Minimum over all pixels and channels.
    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    /// Box-filter (area-averaging) resample to `new_width x new_height`.
    ///
    /// Every output pixel is the coverage-weighted mean of the source pixels
    /// its footprint overlaps, so downsampling by an integer factor reduces to
    /// plain block averages.
    pub fn resize_area(&self, new_width: usize, new_height: usize) -> Result<Self> {
        check_dims(new_width, new_height)?;
        if new_width == self.width && new_height == self.height {
            return Ok(self.clone());
        }
        let wx = area_weights(self.width, new_width);
        let wy = area_weights(self.height, new_height);

        // Horizontal pass into f64 scratch, then vertical.
        let mut horiz = vec![0.0f64; self.height * new_width * 3];
        for y in 0..self.height {
            let src = self.row(y);
            let dst = &mut horiz[y * new_width * 3..(y + 1) * new_width * 3];
            for (ox, taps) in wx.iter().enumerate() {
                let mut acc = [0.0f64; 3];
                for &(sx, w) in taps {
                    for c in 0..3 {
                        acc[c] += w * src[sx * 3 + c].to_f64_lossless();
                    }
                }
                dst[ox * 3..ox * 3 + 3].copy_from_slice(&acc);
            }
        }
        let mut out = Vec::with_capacity(new_width * new_height * 3);
        for taps in &wy {
            for ox in 0..new_width {
                let mut acc = [0.0f64; 3];
                for &(sy, w) in taps {
                    let base = (sy * new_width + ox) * 3;
                    for c in 0..3 {
                        acc[c] += w * horiz[base + c];
                    }
                }
                out.extend(acc.iter().map(|&v| T::of(v)));
            }
        }
        Ok(Self::from_raw(new_width, new_height, out))
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions(format!(
            "image must be at least 1x1, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Source taps and normalized weights for each destination sample along one
/// axis.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let lo = i as f64 * scale;
            let hi = lo + scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            let mut taps: Vec<(usize, f64)> = (first..last)
                .map(|s| {
                    let overlap = (hi.min(s as f64 + 1.0) - lo.max(s as f64)).max(0.0);
                    (s, overlap)
                })
                .filter(|&(_, w)| w > 0.0)
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            for t in &mut taps {
                t.1 /= total;
            }
            taps
        })
        .collect()
}

/// Peak signal-to-noise ratio in dB for a peak value of 1.
pub fn psnr<T: Scalar>(a: &ImagePlane<T>, b: &ImagePlane<T>) -> Result<f64> {
    if a.width != b.width || a.height != b.height {
        return Err(Error::ShapeMismatch(format!(
            "psnr of {}x{} against {}x{}",
            a.width, a.height, b.width, b.height
        )));
    }
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&p, &q)| {
            let d = p.to_f64_lossless() - q.to_f64_lossless();
            d * d
        })
        .sum::<f64>()
        / a.data.len() as f64;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// Largest absolute per-value difference between two equally sized images.
pub fn max_abs_diff<T: Scalar>(a: &ImagePlane<T>, b: &ImagePlane<T>) -> f64 {
    assert_eq!((a.width, a.height), (b.width, b.height));
    a.data
        .iter()
        .zip(&b.data)
        .map(|(&p, &q)| (p.to_f64_lossless() - q.to_f64_lossless()).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ImagePlane::<f32>::new(0, 3, vec![]).is_err());
        assert!(ImagePlane::<f32>::new(1, 1, vec![0.0, f32::NAN, 0.0]).is_err());
        assert!(ImagePlane::<f32>::new(2, 1, vec![0.0; 3]).is_err());
    }

    #[test]
    fn integer_factor_area_resize_is_block_mean() {
        let img = ImagePlane::<f64>::from_fn(4, 2, |x, y| {
            let v = (x + 4 * y) as f64;
            [v, 2.0 * v, 0.5]
        })
        .unwrap();
        let small = img.resize_area(2, 1).unwrap();
        // block (0..2, 0..2): values 0,1,4,5 -> 2.5
        assert_eq!(small.pixel(0, 0), [2.5, 5.0, 0.5]);
        assert_eq!(small.pixel(1, 0), [4.5, 9.0, 0.5]);
    }

    #[test]
    fn fractional_area_resize_preserves_mean() {
        let img = ImagePlane::<f64>::from_fn(7, 5, |x, y| [x as f64, y as f64, (x * y) as f64])
            .unwrap();
        let small = img.resize_area(3, 2).unwrap();
        for c in 0..3 {
            let m0: f64 = img.channel(c).iter().sum::<f64>() / 35.0;
            let m1: f64 = small.channel(c).iter().sum::<f64>() / 6.0;
            assert!((m0 - m1).abs() < 1e-12, "channel {c}: {m0} vs {m1}");
        }
    }

    #[test]
    fn psnr_of_identical_is_infinite() {
        let a = ImagePlane::<f32>::filled(3, 3, [0.2, 0.4, 0.6]).unwrap();
        assert!(psnr(&a, &a).unwrap().is_infinite());
        let b = ImagePlane::<f32>::filled(3, 3, [0.3, 0.4, 0.6]).unwrap();
        // mse = 0.01 / 3
        let expected = -10.0 * (0.01f64 / 3.0).log10();
        assert!((psnr(&a, &b).unwrap() - expected).abs() < 1e-4);
    }
}
