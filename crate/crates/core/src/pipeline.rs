//! End-to-end stylization: low-resolution statistics matching, a regularized
//! grid fit, and full-resolution slicing.
//!
//! Only the low-resolution images enter the fit, so its cost does not depend
//! on the full-resolution size; rendering is the only per-pixel work at full
//! resolution.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fit::{fit_grid, FitProblem, FitReport, DEFAULT_LAMBDA_R, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::grid::AffineBilateralGrid;
use crate::gridfile::GridFile;
use crate::guidance::GuidanceCurve;
use crate::image::ImagePlane;
use crate::slice::slice_apply;
use crate::stats::{adain, FeatureMap, FeatureMapSet};

#[derive(Clone, Debug)]
pub struct StylizeConfig {
    /// Longest allowed low-resolution edge; images are box-downsampled to
    /// `min(lowres, width) x min(lowres, height)`.
    pub lowres: usize,
    pub gw: usize,
    pub gh: usize,
    pub gd: usize,
    pub lambda_r: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub clamp_output: bool,
    pub curve: GuidanceCurve,
    /// Externally computed content and style features. When absent the
    /// low-resolution RGB channels are the features.
    pub features: Option<(FeatureMapSet, FeatureMapSet)>,
}

impl Default for StylizeConfig {
    fn default() -> Self {
        Self {
            lowres: 256,
            gw: 16,
            gh: 16,
            gd: 8,
            lambda_r: DEFAULT_LAMBDA_R,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            clamp_output: false,
            curve: GuidanceCurve::FixedLuma,
            features: None,
        }
    }
}

impl StylizeConfig {
    pub fn with_grid_dims(mut self, gw: usize, gh: usize, gd: usize) -> Self {
        self.gw = gw;
        self.gh = gh;
        self.gd = gd;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.lowres == 0 || self.gw == 0 || self.gh == 0 || self.gd == 0 {
            return Err(Error::InvalidParameter(format!(
                "lowres and grid dimensions must be positive (lowres {}, grid {}x{}x{})",
                self.lowres, self.gw, self.gh, self.gd
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Stylized {
    pub image: ImagePlane<f32>,
    pub grid: AffineBilateralGrid<f32>,
    pub fit: FitReport,
    pub content_lowres: ImagePlane<f32>,
    pub target_lowres: ImagePlane<f32>,
}

impl Stylized {
    pub fn grid_file(&self, curve: &GuidanceCurve) -> GridFile {
        GridFile::new(self.grid.clone(), curve.clone())
    }
}

pub fn downsample_to_lowres(img: &ImagePlane<f32>, lowres: usize) -> Result<ImagePlane<f32>> {
    img.resize_area(img.width().min(lowres), img.height().min(lowres))
}

pub fn stylize(content: &ImagePlane<f32>, style: &ImagePlane<f32>, cfg: &StylizeConfig) -> Result<Stylized> {
    cfg.validate()?;
    let content_low = downsample_to_lowres(content, cfg.lowres)?;
    let style_low = downsample_to_lowres(style, cfg.lowres)?;

    let target = match &cfg.features {
        None => rgb_statistics_target(&content_low, &style_low)?,
        Some((fc, fs)) => feature_statistics_target(&content_low, fc, fs)?,
    };

    let problem = FitProblem::new(content_low.clone(), target.clone())
        .with_grid_dims(cfg.gw, cfg.gh, cfg.gd)
        .with_lambda_r(cfg.lambda_r)
        .with_max_iters(cfg.max_iters)
        .with_tol(cfg.tol)
        .with_curve(cfg.curve.clone());
    let (grid, fit) = fit_grid(&problem)?;

    let mut image = slice_apply(&grid, content, &cfg.curve);
    if cfg.clamp_output {
        image = image.clamped();
    }
    Ok(Stylized {
        image,
        grid,
        fit,
        content_lowres: content_low,
        target_lowres: target,
    })
}

/// Per-channel mean/deviation transfer of the low-res RGB channels.
pub fn rgb_statistics_target(content_low: &ImagePlane<f32>, style_low: &ImagePlane<f32>) -> Result<ImagePlane<f32>> {
    let c = FeatureMap::from_image("rgb", content_low)?;
    let s = FeatureMap::from_image("rgb", style_low)?;
    adain(&c, &s)?.to_image()
}

/// Statistics matching in an external feature space, mapped back to RGB with
/// a linear decoder.
///
/// Every content layer is renormalized to the matching style layer. Both the
/// original and renormalized content features are resampled to the low-res
/// grid and stacked (plus a bias column). A ridge-regularized linear map from
/// the original features to the low-res content RGB is fitted and then applied
/// to the renormalized features to produce the RGB target.
pub fn feature_statistics_target(
    content_low: &ImagePlane<f32>,
    content_features: &FeatureMapSet,
    style_features: &FeatureMapSet,
) -> Result<ImagePlane<f32>> {
    if content_features.is_empty() || content_features.len() != style_features.len() {
        return Err(Error::ShapeMismatch(format!(
            "need the same nonzero number of content and style feature layers, got {} and {}",
            content_features.len(),
            style_features.len()
        )));
    }
    let (w, h) = (content_low.width(), content_low.height());
    let mut original = Vec::new();
    let mut matched = Vec::new();
    for (fc, fs) in content_features.layers.iter().zip(&style_features.layers) {
        let renormalized = adain(fc, fs)?;
        original.push(fc.resize_bilinear(h, w)?);
        matched.push(renormalized.resize_bilinear(h, w)?);
    }
    let channels: usize = original.iter().map(|m| m.channels()).sum::<usize>() + 1;
    let design = |layers: &[FeatureMap]| {
        DMatrix::from_fn(w * h, channels, |p, col| {
            let mut col = col;
            for m in layers {
                if col < m.channels() {
                    return m.as_slice()[p * m.channels() + col];
                }
                col -= m.channels();
            }
            1.0
        })
    };
    let x = design(&original);
    let y = DMatrix::from_fn(w * h, 3, |p, c| content_low.as_slice()[p * 3 + c] as f64);

    let mut gram = x.transpose() * &x;
    let ridge = 1e-6 * gram.trace() / channels as f64 + 1e-12;
    for i in 0..channels {
        gram[(i, i)] += ridge;
    }
    let decoder = gram
        .cholesky()
        .ok_or_else(|| Error::Degenerate("feature decoder normal matrix is not positive definite".into()))?
        .solve(&(x.transpose() * &y));
    let rgb = design(&matched) * decoder;
    let data = (0..w * h).flat_map(|p| (0..3).map(move |c| (p, c))).map(|(p, c)| rgb[(p, c)] as f32).collect();
    ImagePlane::new(w, h, data)
}

/// Applies a grid file at full resolution.
pub fn apply_grid_file(file: &GridFile, img: &ImagePlane<f32>, clamp: bool) -> ImagePlane<f32> {
    let out = slice_apply(&file.grid, img, &file.guidance);
    if clamp {
        out.clamped()
    } else {
        out
    }
}

/// PNG files in `dir`, ordered by file name.
pub fn frame_paths(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}
