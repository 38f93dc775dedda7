//! Seeded synthetic images, grids and transforms for benchmarks, gradient
//! checks and tests.
//!
//! Images are defined on normalized coordinates, so the same seed yields the
//! same scene at any resolution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{identity_affine, Affine, AffineBilateralGrid};
use crate::image::ImagePlane;
use crate::scalar::Scalar;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct Wave {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: [f64; 3],
}

struct Blob {
    cx: f64,
    cy: f64,
    radius: f64,
    tint: [f64; 3],
}

/// A smooth, photo-like test scene: low-frequency color waves plus a few
/// soft-edged discs that create edges. Values lie in `[0.05, 0.95]`.
pub fn smooth_image<T: Scalar>(width: usize, height: usize, seed: u64) -> ImagePlane<T> {
    let mut r = rng(seed);
    let base: [f64; 3] = std::array::from_fn(|_| r.gen_range(0.3..0.7));
    let waves: Vec<Wave> = (0..4)
        .map(|_| Wave {
            fx: r.gen_range(0.5..3.0),
            fy: r.gen_range(0.5..3.0),
            phase: r.gen_range(0.0..std::f64::consts::TAU),
            amp: std::array::from_fn(|_| r.gen_range(-0.12..0.12)),
        })
        .collect();
    let blobs: Vec<Blob> = (0..3)
        .map(|_| Blob {
            cx: r.gen_range(0.15..0.85),
            cy: r.gen_range(0.15..0.85),
            radius: r.gen_range(0.08..0.25),
            tint: std::array::from_fn(|_| r.gen_range(-0.3..0.3)),
        })
        .collect();
    ImagePlane::from_fn(width, height, |x, y| {
        let u = (x as f64 + 0.5) / width as f64;
        let v = (y as f64 + 0.5) / height as f64;
        let mut c = base;
        for w in &waves {
            let s = (std::f64::consts::TAU * (w.fx * u + w.fy * v) + w.phase).sin();
            for k in 0..3 {
                c[k] += w.amp[k] * s;
            }
        }
        for b in &blobs {
            let d = ((u - b.cx).powi(2) + (v - b.cy).powi(2)).sqrt();
            let inside = 1.0 / (1.0 + ((d - b.radius) * 80.0).exp());
            for k in 0..3 {
                c[k] += b.tint[k] * inside;
            }
        }
        c.map(|v| T::of(v.clamp(0.05, 0.95)))
    })
    .expect("synthetic image is finite")
}

/// Independent uniform noise in `[lo, hi)` per value.
pub fn noise_image<T: Scalar>(width: usize, height: usize, lo: f64, hi: f64, seed: u64) -> ImagePlane<T> {
    let mut r = rng(seed);
    ImagePlane::from_fn(width, height, |_, _| std::array::from_fn(|_| T::of(r.gen_range(lo..hi))))
        .expect("noise image is finite")
}

/// Identity grid with uniform perturbations of size `amplitude` on every
/// coefficient.
pub fn perturbed_identity<T: Scalar>(gw: usize, gh: usize, gd: usize, amplitude: f64, seed: u64) -> AffineBilateralGrid<T> {
    let mut r = rng(seed);
    let id: Affine<f64> = identity_affine();
    let cells = (0..gw * gh * gd)
        .map(|_| std::array::from_fn(|k| T::of(id[k] + r.gen_range(-amplitude..=amplitude))))
        .collect();
    AffineBilateralGrid::from_cells(gw, gh, gd, cells).expect("grid dims are nonzero")
}

/// A global color transform `I + P` with `|P_ij| <= 0.25` and offsets within
/// `0.1`; well conditioned by construction.
pub fn well_conditioned_affine(seed: u64) -> Affine<f64> {
    let mut r = rng(seed);
    let mut a: Affine<f64> = identity_affine();
    for row in 0..3 {
        for col in 0..3 {
            a[row * 4 + col] += r.gen_range(-0.25..0.25);
        }
        a[row * 4 + 3] = r.gen_range(-0.1..0.1);
    }
    a
}

/// Applies one affine transform to every pixel.
pub fn apply_global<T: Scalar>(a: &Affine<f64>, img: &ImagePlane<T>) -> ImagePlane<T> {
    ImagePlane::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.pixel(x, y).map(|v| v.to_f64_lossless());
        std::array::from_fn(|row| T::of(a[4 * row] * r + a[4 * row + 1] * g + a[4 * row + 2] * b + a[4 * row + 3]))
    })
    .expect("affine of finite image is finite")
}
