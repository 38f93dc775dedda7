//! Gradients of slicing and of the Laplacian energy with respect to grid
//! coefficients.
//!
//! Slicing is linear in the grid, so its backward pass is the exact adjoint:
//! each pixel scatters `upstream (x) (r, g, b, 1)` into its eight supporting
//! cells, weighted by its trilinear weights. The guidance value is treated as
//! a constant per pixel; no gradient flows through the luma computation.

use crate::error::{Error, Result};
use crate::exec::{fixed_ranges, map_ordered, Execution};
use crate::grid::{footprint_at, luma_to_cell, pixel_to_cell, Affine, AffineBilateralGrid, GridDims};
use crate::guidance::GuidanceCurve;
use crate::image::ImagePlane;
use crate::laplacian::add_graph_laplacian;
use crate::scalar::Scalar;

/// Partial derivatives of a scalar objective with respect to every grid
/// coefficient, laid out like the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridGradient<T: Scalar = f64> {
    dims: GridDims,
    cells: Vec<Affine<T>>,
}

impl<T: Scalar> GridGradient<T> {
    pub fn zeros(dims: GridDims) -> Self {
        Self {
            dims,
            cells: vec![[T::zero(); 12]; dims.cell_count()],
        }
    }

    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn cells(&self) -> &[Affine<T>] {
        &self.cells
    }

    pub fn coeffs(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.iter().flatten().copied()
    }

    /// Inner product with a same-shaped coefficient array.
    pub fn dot(&self, other: &[Affine<T>]) -> f64 {
        assert_eq!(other.len(), self.cells.len());
        self.cells
            .iter()
            .flatten()
            .zip(other.iter().flatten())
            .map(|(&a, &b)| a.to_f64_lossless() * b.to_f64_lossless())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().map(|v| v.to_f64_lossless().abs()).fold(0.0, f64::max)
    }

    fn accumulate(&mut self, other: &Self) {
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            for k in 0..12 {
                a[k] = a[k] + b[k];
            }
        }
    }
}

/// Adjoint of [`slice_apply`](crate::slice_apply): the gradient of
/// `sum_p <upstream[p], output[p]>` with respect to the grid.
pub fn slice_backward<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
    upstream: &ImagePlane<T>,
) -> Result<GridGradient<T>> {
    slice_backward_with(grid, img, curve, upstream, Execution::default())
}

pub fn slice_backward_with<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    img: &ImagePlane<T>,
    curve: &GuidanceCurve,
    upstream: &ImagePlane<T>,
    exec: Execution,
) -> Result<GridGradient<T>> {
    if (img.width(), img.height()) != (upstream.width(), upstream.height()) {
        return Err(Error::ShapeMismatch(format!(
            "upstream {}x{} does not match image {}x{}",
            upstream.width(),
            upstream.height(),
            img.width(),
            img.height()
        )));
    }
    let dims = grid.dims();
    let (w, h) = (img.width(), img.height());
    let ranges = fixed_ranges(h, 64);

    // One accumulator per fixed row range, merged in range order.
    let partials = map_ordered(exec, ranges.len(), |i| {
        let mut acc = GridGradient::zeros(dims);
        for y in ranges[i].clone() {
            let gy = pixel_to_cell::<T>(y, h, dims.gh);
            let src = img.row(y);
            let up = upstream.row(y);
            for x in 0..w {
                let (r, g, b) = (src[3 * x], src[3 * x + 1], src[3 * x + 2]);
                let u = [up[3 * x], up[3 * x + 1], up[3 * x + 2]];
                let gx = pixel_to_cell::<T>(x, w, dims.gw);
                let gz = luma_to_cell(curve.eval(r, g, b), dims.gd);
                let (cells, weights) = footprint_at(dims, gx, gy, gz);
                let xt = [r, g, b, T::one()];
                for (&c, &wt) in cells.iter().zip(&weights) {
                    if wt == T::zero() {
                        continue;
                    }
                    let cell = &mut acc.cells[c];
                    for row in 0..3 {
                        let s = wt * u[row];
                        for col in 0..4 {
                            cell[row * 4 + col] = cell[row * 4 + col] + s * xt[col];
                        }
                    }
                }
            }
        }
        acc
    });

    let mut total = GridGradient::zeros(dims);
    for p in &partials {
        total.accumulate(p);
    }
    Ok(total)
}

/// Gradient of [`laplacian_energy`](crate::laplacian_energy).
pub fn laplacian_backward<T: Scalar>(grid: &AffineBilateralGrid<T>) -> GridGradient<T> {
    let mut g = GridGradient::zeros(grid.dims());
    add_graph_laplacian(grid.dims(), grid.cells(), &mut g.cells, T::of(4.0));
    g
}
