//! PNG input and output.
//!
//! 8- and 16-bit PNGs decode to `[0, 1]` reals. Export quantizes with
//! round-to-nearest and saturates values outside `[0, 1]`.

use std::path::Path;

use image::{DynamicImage, ImageBuffer, Rgb};

use crate::error::{Error, Result};
use crate::image::ImagePlane;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

fn codec_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn read_png(path: impl AsRef<Path>) -> Result<ImagePlane<f32>> {
    let path = path.as_ref();
    let decoded = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| codec_err(path, e))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let data: Vec<f32> = match &decoded {
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => decoded
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 65535.0)
            .collect(),
        DynamicImage::ImageRgb32F(_) | DynamicImage::ImageRgba32F(_) => decoded.to_rgb32f().into_raw(),
        _ => decoded
            .to_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| v as f32 / 255.0)
            .collect(),
    };
    ImagePlane::new(w, h, data)
}

pub fn write_png(path: impl AsRef<Path>, img: &ImagePlane<f32>, clamp: bool, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let prepared;
    let src = if clamp {
        prepared = img.clamped();
        &prepared
    } else {
        img
    };
    let result = match depth {
        BitDepth::Eight => {
            let raw = src.as_slice().iter().map(|&v| quantize(v, 255.0) as u8).collect();
            ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w, h, raw)
                .expect("buffer size matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        }
        BitDepth::Sixteen => {
            let raw = src.as_slice().iter().map(|&v| quantize(v, 65535.0) as u16).collect();
            ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w, h, raw)
                .expect("buffer size matches dimensions")
                .save_with_format(path, image::ImageFormat::Png)
        }
    };
    result.map_err(|e| codec_err(path, e))
}

#[inline]
fn quantize(v: f32, max: f32) -> f32 {
    (v * max).round().clamp(0.0, max)
}
