//! Full-resolution rendering: slice a per-pixel affine transform out of the
//! grid and apply it to the pixel's color.
//!
//! Trilinear interpolation is evaluated separably. For each image row the two
//! bracketing y-layers of the grid are blended once into a `gw x gd` slab;
//! every pixel then blends the four slab cells around its (x, luma)
//! position. The result equals the eight-cell trilinear weight form exactly
//! in real arithmetic.
//!
//! `f32` rendering stores each 3x4 matrix as four column vectors and runs on
//! 4-lane SIMD. It performs the same operations in the same order as the
//! scalar kernel used for `f64`, so both produce identical bits.

use std::any::Any;

use wide::f32x4;

use crate::error::{Error, Result};
use crate::exec::{for_each_row, Execution};
use crate::grid::{axis_sample, luma_to_cell, pixel_to_cell, Affine, AffineBilateralGrid, GridDims};
use crate::guidance::{GuidanceCurve, LUMA_WEIGHTS};
use crate::image::ImagePlane;
use crate::scalar::Scalar;

/// Slices `grid` at every pixel of `img` and applies the resulting affine
/// transforms. Output values are not clamped.
pub fn slice_apply<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
) -> ImagePlane<T> {
    slice_apply_with(grid, img, curve, Execution::default())
}

pub fn slice_apply_with<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
    exec: Execution,
) -> ImagePlane<T> {
    let mut out = ImagePlane::from_raw(img.width(), img.height(), vec![T::zero(); img.as_slice().len()]);
    slice_apply_into(grid, img, curve, exec, &mut out).expect("output allocated with the input's shape");
    out
}

/// Renders into an existing buffer of the same size as `img`, so a frame loop
/// can reuse one output allocation.
pub fn slice_apply_into<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
    exec: Execution,
    out: &mut ImagePlane<T>,
) -> Result<()> {
    if (out.width(), out.height()) != (img.width(), img.height()) {
        return Err(Error::ShapeMismatch(format!(
            "output is {}x{}, input is {}x{}",
            out.width(),
            out.height(),
            img.width(),
            img.height()
        )));
    }
    let grid_f32 = (grid as &dyn Any).downcast_ref::<AffineBilateralGrid<f32>>();
    let img_f32 = (img as &dyn Any).downcast_ref::<ImagePlane<f32>>();
    if let (Some(g), Some(i)) = (grid_f32, img_f32) {
        let o = (out as &mut dyn Any)
            .downcast_mut::<ImagePlane<f32>>()
            .expect("output type follows input type");
        match curve {
            GuidanceCurve::FixedLuma => render_f32(g, i, exec, o.as_mut_slice(), fixed_luma::<f32>()),
            lut => render_f32(g, i, exec, o.as_mut_slice(), |r, g, b| lut.eval(r, g, b)),
        }
    } else {
        render_scalar_into(grid, img, curve, exec, out.as_mut_slice());
    }
    Ok(())
}

fn fixed_luma<T: Scalar>() -> impl Fn(T, T, T) -> T + Send + Sync {
    let (kr, kg, kb) = (T::of(LUMA_WEIGHTS[0]), T::of(LUMA_WEIGHTS[1]), T::of(LUMA_WEIGHTS[2]));
    move |r, g, b| (kr * r + kg * g + kb * b).max(T::zero()).min(T::one())
}

/// Scalar kernel for any element type. Also the reference for the SIMD path.
pub(crate) fn render_scalar_into<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
    exec: Execution,
    out: &mut [T],
) {
    match curve {
        GuidanceCurve::FixedLuma => render_scalar(grid, img, exec, out, fixed_luma::<T>()),
        lut => render_scalar(grid, img, exec, out, |r, g, b| lut.eval(r, g, b)),
    }
}

/// Per column: slab offsets of the two bracketing x-cells and their weights.
fn column_table<T: Scalar>(w: usize, gw: usize, gd: usize) -> Vec<(usize, usize, T, T)> {
    (0..w)
        .map(|x| {
            let s = axis_sample(pixel_to_cell(x, w, gw), gw);
            (s.i0 * gd, s.i1 * gd, T::one() - s.f, s.f)
        })
        .collect()
}

fn render_scalar<T, G>(grid: &AffineBilateralGrid<T>, img: &ImagePlane<T>, exec: Execution, out: &mut [T], guide: G)
where
    T: Scalar,
    G: Fn(T, T, T) -> T + Send + Sync,
{
    let (w, h) = (img.width(), img.height());
    let dims = grid.dims();
    let (gw, gh, gd) = (dims.gw, dims.gh, dims.gd);
    let columns = column_table::<T>(w, gw, gd);
    let cells = grid.cells();

    for_each_row(
        exec,
        out,
        w * 3,
        || vec![[T::zero(); 12]; gw * gd],
        |slab: &mut Vec<Affine<T>>, y, dst| {
            let sy = axis_sample(pixel_to_cell(y, h, gh), gh);
            blend_layers(slab, cells, dims.index(0, sy.i0, 0), dims.index(0, sy.i1, 0), sy.f);
            let slab = slab.as_slice();
            let src = img.row(y);
            for ((px, o), &(x0, x1, wx0, wx1)) in src.chunks_exact(3).zip(dst.chunks_exact_mut(3)).zip(&columns) {
                let (r, g, b) = (px[0], px[1], px[2]);
                let sz = axis_sample(luma_to_cell(guide(r, g, b), gd), gd);
                let (wz0, wz1) = (T::one() - sz.f, sz.f);
                let (w00, w01, w10, w11) = (wx0 * wz0, wx0 * wz1, wx1 * wz0, wx1 * wz1);
                let c00 = &slab[x0 + sz.i0];
                let c01 = &slab[x0 + sz.i1];
                let c10 = &slab[x1 + sz.i0];
                let c11 = &slab[x1 + sz.i1];
                let a: Affine<T> = std::array::from_fn(|k| w00 * c00[k] + w01 * c01[k] + w10 * c10[k] + w11 * c11[k]);
                o[0] = a[0] * r + a[1] * g + a[2] * b + a[3];
                o[1] = a[4] * r + a[5] * g + a[6] * b + a[7];
                o[2] = a[8] * r + a[9] * g + a[10] * b + a[11];
            }
        },
    );
}

/// `slab = (1 - f) * layer0 + f * layer1` over one y-layer of `gw * gd` cells.
#[inline]
fn blend_layers<T: Scalar>(slab: &mut [Affine<T>], cells: &[Affine<T>], start0: usize, start1: usize, f: T) {
    let n = slab.len();
    let w0 = T::one() - f;
    for ((s, c0), c1) in slab
        .iter_mut()
        .zip(&cells[start0..start0 + n])
        .zip(&cells[start1..start1 + n])
    {
        for k in 0..12 {
            s[k] = w0 * c0[k] + f * c1[k];
        }
    }
}

/// A 3x4 matrix as its four columns; lane 3 is unused.
type Columns = [f32x4; 4];

fn to_columns(a: &Affine<f32>) -> Columns {
    std::array::from_fn(|j| f32x4::from([a[j], a[4 + j], a[8 + j], 0.0]))
}

fn render_f32<G>(grid: &AffineBilateralGrid<f32>, img: &ImagePlane<f32>, exec: Execution, out: &mut [f32], guide: G)
where
    G: Fn(f32, f32, f32) -> f32 + Send + Sync,
{
    let (w, h) = (img.width(), img.height());
    let dims: GridDims = grid.dims();
    let (gw, gh, gd) = (dims.gw, dims.gh, dims.gd);
    let columns = column_table::<f32>(w, gw, gd);
    let cells: Vec<Columns> = grid.cells().iter().map(to_columns).collect();
    let layer = gw * gd;
    let (zscale, zmax) = (gd as f32, (gd - 1) as f32);

    for_each_row(
        exec,
        out,
        w * 3,
        || vec![[f32x4::ZERO; 4]; layer],
        |slab: &mut Vec<Columns>, y, dst| {
            let sy = axis_sample(pixel_to_cell::<f32>(y, h, gh), gh);
            let (w0, w1) = (f32x4::splat(1.0 - sy.f), f32x4::splat(sy.f));
            let l0 = &cells[sy.i0 * layer..(sy.i0 + 1) * layer];
            let l1 = &cells[sy.i1 * layer..(sy.i1 + 1) * layer];
            for ((s, c0), c1) in slab.iter_mut().zip(l0).zip(l1) {
                for j in 0..4 {
                    s[j] = w0 * c0[j] + w1 * c1[j];
                }
            }
            let slab = slab.as_slice();
            let src = &img.as_slice()[y * w * 3..(y + 1) * w * 3];
            for ((px, o), &(x0, x1, wx0, wx1)) in src.chunks_exact(3).zip(dst.chunks_exact_mut(3)).zip(&columns) {
                let (r, g, b) = (px[0], px[1], px[2]);
                // Same clamp-and-split as `axis_sample`, with i32 conversions.
                let z = (guide(r, g, b) * zscale - 0.5).max(0.0).min(zmax);
                let zi = z as i32;
                let fz = z - zi as f32;
                let i0 = zi as usize;
                let i1 = (i0 + 1).min(gd - 1);
                let (wz0, wz1) = (1.0 - fz, fz);
                let v00 = f32x4::splat(wx0 * wz0);
                let v01 = f32x4::splat(wx0 * wz1);
                let v10 = f32x4::splat(wx1 * wz0);
                let v11 = f32x4::splat(wx1 * wz1);
                let (c00, c01, c10, c11) = (&slab[x0 + i0], &slab[x0 + i1], &slab[x1 + i0], &slab[x1 + i1]);
                let a: Columns = std::array::from_fn(|j| v00 * c00[j] + v01 * c01[j] + v10 * c10[j] + v11 * c11[j]);
                let rgb = (a[0] * f32x4::splat(r) + a[1] * f32x4::splat(g) + a[2] * f32x4::splat(b) + a[3]).to_array();
                o.copy_from_slice(&rgb[..3]);
            }
        },
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::identity_affine;

    fn ramp(w: usize, h: usize) -> ImagePlane<f64> {
        ImagePlane::from_fn(w, h, |x, y| {
            let u = (x as f64 + 0.5) / w as f64;
            let v = (y as f64 + 0.5) / h as f64;
            [u, v, 0.5 * (u + v)]
        })
        .unwrap()
    }

    #[test]
    fn identity_grid_reproduces_input() {
        let img = ramp(13, 7);
        let grid = AffineBilateralGrid::<f64>::identity(3, 4, 5).unwrap();
        let out = slice_apply(&grid, &img, &GuidanceCurve::FixedLuma);
        assert!(crate::image::max_abs_diff(&img, &out) <= 1e-12);
    }

    #[test]
    fn constant_half_gain_grid() {
        let mut a = [0.0f32; 12];
        a[0] = 0.5;
        a[5] = 0.5;
        a[10] = 0.5;
        let grid = AffineBilateralGrid::constant(4, 4, 4, a).unwrap();
        let img = ImagePlane::<f32>::filled(1, 1, [0.8, 0.6, 0.4]).unwrap();
        let out = slice_apply(&grid, &img, &GuidanceCurve::FixedLuma);
        let p = out.pixel(0, 0);
        for (got, want) in p.iter().zip([0.4f32, 0.3, 0.2]) {
            assert!((got - want).abs() < 1e-6);
        }
    }

    #[test]
    fn midpoint_between_identity_and_zero_cells() {
        // Single pixel at u = 0.5 lands at continuous x = 0.5: halfway between
        // the two cells.
        let grid = AffineBilateralGrid::from_cells(2, 1, 1, vec![identity_affine(), [0.0f64; 12]]).unwrap();
        let img = ImagePlane::<f64>::filled(1, 1, [0.9, 0.3, 0.6]).unwrap();
        let out = slice_apply(&grid, &img, &GuidanceCurve::FixedLuma);
        let p = out.pixel(0, 0);
        for (got, want) in p.iter().zip([0.45, 0.15, 0.3]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn sequential_and_parallel_are_bit_identical() {
        let img = ramp(31, 17).cast::<f32>();
        let cells: Vec<Affine<f32>> = (0..4 * 3 * 5)
            .map(|i| std::array::from_fn(|k| ((i * 7 + k * 3) % 11) as f32 * 0.1 - 0.4))
            .collect();
        let grid = AffineBilateralGrid::from_cells(4, 3, 5, cells).unwrap();
        let a = slice_apply_with(&grid, &img, &GuidanceCurve::FixedLuma, Execution::Sequential);
        let b = slice_apply_with(&grid, &img, &GuidanceCurve::FixedLuma, Execution::Parallel);
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn lut_guidance_selects_luma_bin() {
        // Two luma bins: bin 0 doubles, bin 1 zeroes. An inverting LUT sends
        // dark pixels to bin 1.
        let mut double = [0.0f64; 12];
        double[0] = 2.0;
        double[5] = 2.0;
        double[10] = 2.0;
        let grid = AffineBilateralGrid::from_cells(1, 1, 2, vec![double, [0.0; 12]]).unwrap();
        let dark_to_top = GuidanceCurve::lut(vec![1.0, 0.0]).unwrap();
        let probe = ImagePlane::<f64>::filled(1, 1, [0.1, 0.1, 0.1]).unwrap();
        let out = slice_apply(&grid, &probe, &dark_to_top);
        // z = 0.9 -> cell coordinate 1.3, clamped to 1: bin 1 only.
        assert_eq!(out.pixel(0, 0), [0.0, 0.0, 0.0]);
        let out = slice_apply(&grid, &probe, &GuidanceCurve::FixedLuma);
        // z = 0.1 -> cell coordinate -0.3, clamped to 0: bin 0 only.
        for v in out.pixel(0, 0) {
            assert!((v - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn simd_path_matches_scalar_kernel_bitwise() {
        let img = crate::synth::noise_image::<f32>(45, 19, -0.1, 1.1, 3);
        let grid = crate::synth::perturbed_identity::<f32>(5, 4, 6, 0.4, 8);
        for curve in [GuidanceCurve::FixedLuma, GuidanceCurve::lut(vec![0.1, 0.7, 0.4, 0.95]).unwrap()] {
            let fast = slice_apply(&grid, &img, &curve);
            let mut reference = vec![0.0f32; img.as_slice().len()];
            render_scalar_into(&grid, &img, &curve, Execution::Sequential, &mut reference);
            assert_eq!(fast.as_slice(), &reference[..]);
        }
    }

    #[test]
    fn into_rejects_wrong_output_size() {
        let img = ImagePlane::<f32>::filled(4, 3, [0.5; 3]).unwrap();
        let mut out = ImagePlane::<f32>::filled(3, 4, [0.0; 3]).unwrap();
        let grid = AffineBilateralGrid::<f32>::identity(2, 2, 2).unwrap();
        let err = slice_apply_into(&grid, &img, &GuidanceCurve::FixedLuma, Execution::Sequential, &mut out);
        assert!(matches!(err, Err(Error::ShapeMismatch(_))));
    }
}
