//! Channel statistics matching (AdaIN) and the content/style losses built on
//! feature maps.
//!
//! All losses normalize each layer's term by its element count, so their
//! magnitude does not depend on feature resolution.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::AffineBilateralGrid;
use crate::image::ImagePlane;
use crate::laplacian::laplacian_energy;
use crate::scalar::Scalar;

/// Added to the variance before the square root so constant channels have a
/// defined, nonzero deviation.
pub const STD_EPSILON: f64 = 1e-5;

/// An H x W x C feature map stored row-major in (y, x, c) order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMap {
    pub name: String,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(name: impl Into<String>, height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        if channels == 0 || height * width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "feature map '{name}' is {height}x{width}x{channels}; need C >= 1 and H*W >= 1"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "feature map '{name}' needs {} values, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature map '{name}'")));
        }
        Ok(Self {
            name,
            height,
            width,
            channels,
            data,
        })
    }

    /// Treats the RGB channels of an image as a three-channel feature map.
    pub fn from_image<T: Scalar>(name: impl Into<String>, img: &ImagePlane<T>) -> Result<Self> {
        let data = img.as_slice().iter().map(|v| v.to_f64_lossless()).collect();
        Self::new(name, img.height(), img.width(), 3, data)
    }

    pub fn to_image(&self) -> Result<ImagePlane<f32>> {
        if self.channels != 3 {
            return Err(Error::ShapeMismatch(format!(
                "feature map '{}' has {} channels, an image needs 3",
                self.name, self.channels
            )));
        }
        ImagePlane::new(self.width, self.height, self.data.iter().map(|&v| v as f32).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn positions(&self) -> usize {
        self.height * self.width
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    /// Bilinear resample to `height x width` with half-pixel-centered,
    /// clamp-to-edge sampling.
    pub fn resize_bilinear(&self, height: usize, width: usize) -> Result<Self> {
        if (height, width) == (self.height, self.width) {
            return Ok(self.clone());
        }
        let coord = |i: usize, dst: usize, src: usize| -> (usize, usize, f64) {
            let p = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = p.floor() as usize;
            (i0, (i0 + 1).min(src - 1), p - i0 as f64)
        };
        let mut data = Vec::with_capacity(height * width * self.channels);
        for y in 0..height {
            let (y0, y1, fy) = coord(y, height, self.height);
            for x in 0..width {
                let (x0, x1, fx) = coord(x, width, self.width);
                for c in 0..self.channels {
                    let top = (1.0 - fx) * self.at(y0, x0, c) + fx * self.at(y0, x1, c);
                    let bot = (1.0 - fx) * self.at(y1, x0, c) + fx * self.at(y1, x1, c);
                    data.push((1.0 - fy) * top + fy * bot);
                }
            }
        }
        Self::new(self.name.clone(), height, width, self.channels, data)
    }
}

/// An ordered list of feature maps, one per layer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureMapSet {
    pub layers: Vec<FeatureMap>,
}

impl FeatureMapSet {
    pub fn new(layers: Vec<FeatureMap>) -> Self {
        Self { layers }
    }

    pub fn single(map: FeatureMap) -> Self {
        Self { layers: vec![map] }
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Population mean and `sqrt(variance + STD_EPSILON)` of every channel.
pub fn channel_stats(map: &FeatureMap) -> ChannelStats {
    let c = map.channels;
    let mut mean = vec![0.0; c];
    let mut m2 = vec![0.0; c];
    // Welford's update, one pass over positions.
    for (n, px) in map.data.chunks_exact(c).enumerate() {
        let k = (n + 1) as f64;
        for ch in 0..c {
            let d = px[ch] - mean[ch];
            mean[ch] += d / k;
            m2[ch] += d * (px[ch] - mean[ch]);
        }
    }
    let n = map.positions() as f64;
    let std = m2.iter().map(|&s| (s / n + STD_EPSILON).sqrt()).collect();
    ChannelStats { mean, std }
}

/// Renormalizes each content channel to the style channel's mean and
/// deviation: `std_s * (x - mean_c) / std_c + mean_s`.
pub fn adain(content: &FeatureMap, style: &FeatureMap) -> Result<FeatureMap> {
    if content.channels != style.channels {
        return Err(Error::ShapeMismatch(format!(
            "adain of {}-channel content with {}-channel style",
            content.channels, style.channels
        )));
    }
    let cs = channel_stats(content);
    let ss = channel_stats(style);
    let c = content.channels;
    let gain: Vec<f64> = (0..c).map(|i| ss.std[i] / cs.std[i]).collect();
    let data = content
        .data
        .chunks_exact(c)
        .flat_map(|px| (0..c).map(|i| gain[i] * (px[i] - cs.mean[i]) + ss.mean[i]).collect::<Vec<_>>())
        .collect();
    FeatureMap::new(content.name.clone(), content.height, content.width, c, data)
}

/// `F F^T / (H W)` with channels as rows of `F`.
pub fn gram_matrix(map: &FeatureMap) -> DMatrix<f64> {
    let c = map.channels;
    let f = DMatrix::from_column_slice(c, map.positions(), &map.data);
    (&f * f.transpose()) / map.positions() as f64
}

/// Sum over layers of `||F_i[out] - F_i[content]||^2 / (H W C)`.
pub fn content_loss(out: &FeatureMapSet, content: &FeatureMapSet) -> Result<f64> {
    check_layer_count(out, content)?;
    let mut total = 0.0;
    for (a, b) in out.layers.iter().zip(&content.layers) {
        if (a.height, a.width, a.channels) != (b.height, b.width, b.channels) {
            return Err(Error::ShapeMismatch(format!(
                "content layer '{}' is {}x{}x{} vs {}x{}x{}",
                a.name, a.height, a.width, a.channels, b.height, b.width, b.channels
            )));
        }
        let sq: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum();
        total += sq / a.data.len() as f64;
    }
    Ok(total)
}

/// Sum over layers of `||G_i[out] - G_i[style]||_F^2 / C^2`.
pub fn style_loss_gram(out: &FeatureMapSet, style: &FeatureMapSet) -> Result<f64> {
    check_layer_count(out, style)?;
    let mut total = 0.0;
    for (a, b) in out.layers.iter().zip(&style.layers) {
        check_channels(a, b)?;
        let d = gram_matrix(a) - gram_matrix(b);
        total += d.norm_squared() / (a.channels * a.channels) as f64;
    }
    Ok(total)
}

/// Sum over layers of `(||mu_out - mu_style||^2 + ||sigma_out - sigma_style||^2) / C`.
pub fn style_loss_adain(out: &FeatureMapSet, style: &FeatureMapSet) -> Result<f64> {
    check_layer_count(out, style)?;
    let mut total = 0.0;
    for (a, b) in out.layers.iter().zip(&style.layers) {
        check_channels(a, b)?;
        let (sa, sb) = (channel_stats(a), channel_stats(b));
        let dm: f64 = sa.mean.iter().zip(&sb.mean).map(|(x, y)| (x - y) * (x - y)).sum();
        let ds: f64 = sa.std.iter().zip(&sb.std).map(|(x, y)| (x - y) * (x - y)).sum();
        total += (dm + ds) / a.channels as f64;
    }
    Ok(total)
}

fn check_layer_count(a: &FeatureMapSet, b: &FeatureMapSet) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!("{} layers vs {} layers", a.len(), b.len())));
    }
    Ok(())
}

fn check_channels(a: &FeatureMap, b: &FeatureMap) -> Result<()> {
    if a.channels != b.channels {
        return Err(Error::ShapeMismatch(format!(
            "layer '{}' has {} channels vs {}",
            a.name, a.channels, b.channels
        )));
    }
    Ok(())
}

/// Weights of the content, statistics-style and Laplacian terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_c: f64,
    pub lambda_sa: f64,
    pub lambda_r: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_c: 0.5,
            lambda_sa: 1.0,
            lambda_r: 0.15,
        }
    }
}

impl LossWeights {
    pub fn new(lambda_c: f64, lambda_sa: f64, lambda_r: f64) -> Result<Self> {
        if [lambda_c, lambda_sa, lambda_r].iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "loss weights must be finite and >= 0, got ({lambda_c}, {lambda_sa}, {lambda_r})"
            )));
        }
        Ok(Self {
            lambda_c,
            lambda_sa,
            lambda_r,
        })
    }

    pub fn combine(&self, content: f64, style_adain: f64, laplacian: f64) -> f64 {
        self.lambda_c * content + self.lambda_sa * style_adain + self.lambda_r * laplacian
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown {
    pub content: f64,
    pub style_adain: f64,
    pub laplacian: f64,
    pub total: f64,
}

/// `lambda_c * L_c + lambda_sa * L_sa + lambda_r * L_r`.
pub fn total_loss<T: Scalar>(
    out: &FeatureMapSet,
    content: &FeatureMapSet,
    style: &FeatureMapSet,
    grid: &AffineBilateralGrid<T>,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let c = content_loss(out, content)?;
    let sa = style_loss_adain(out, style)?;
    let r = laplacian_energy(grid);
    Ok(LossBreakdown {
        content: c,
        style_adain: sa,
        laplacian: r,
        total: weights.combine(c, sa, r),
    })
}

/// The Gram-matrix combination `alpha * L_c + beta * L_s`.
pub fn gram_total_loss(
    out: &FeatureMapSet,
    content: &FeatureMapSet,
    style: &FeatureMapSet,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    Ok(alpha * content_loss(out, content)? + beta * style_loss_gram(out, style)?)
}
