//! The affine bilateral grid and its trilinear sampling rules.
//!
//! Cells are stored y-major, then x, then z (luma). Each cell is a 3x4
//! row-major affine color transform: output row `r` is
//! `cell[4r] * red + cell[4r + 1] * green + cell[4r + 2] * blue + cell[4r + 3]`.
//!
//! Sampling uses half-cell-centered coordinates: a normalized position `u` in
//! `[0, 1]` maps to the continuous cell coordinate `u * n - 0.5`, which is then
//! clamped to `[0, n - 1]`. Cell centers therefore sit at `(i + 0.5) / n`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A 3x4 affine color transform, row-major.
pub type Affine<T> = [T; 12];

pub const COEFFS_PER_CELL: usize = 12;

pub fn identity_affine<T: Scalar>() -> Affine<T> {
    let mut a = [T::zero(); 12];
    a[0] = T::one();
    a[5] = T::one();
    a[10] = T::one();
    a
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridDims {
    pub gw: usize,
    pub gh: usize,
    pub gd: usize,
}

impl GridDims {
    pub fn new(gw: usize, gh: usize, gd: usize) -> Result<Self> {
        if gw == 0 || gh == 0 || gd == 0 {
            return Err(Error::InvalidDimensions(format!(
                "grid must be at least 1x1x1, got {gw}x{gh}x{gd}"
            )));
        }
        Ok(Self { gw, gh, gd })
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.gw * self.gh * self.gd
    }

    #[inline(always)]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        (y * self.gw + x) * self.gd + z
    }

    /// Number of six-connected neighbors of the cell at `(x, y, z)`.
    pub fn degree(&self, x: usize, y: usize, z: usize) -> usize {
        let axis = |i: usize, n: usize| (i > 0) as usize + (i + 1 < n) as usize;
        axis(x, self.gw) + axis(y, self.gh) + axis(z, self.gd)
    }
}

/// A `gw x gh x gd` lattice of 3x4 affine color transforms.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineBilateralGrid<T: Scalar = f32> {
    dims: GridDims,
    cells: Vec<Affine<T>>,
}

impl<T: Scalar> AffineBilateralGrid<T> {
    pub fn identity(gw: usize, gh: usize, gd: usize) -> Result<Self> {
        Self::constant(gw, gh, gd, identity_affine())
    }

    pub fn constant(gw: usize, gh: usize, gd: usize, cell: Affine<T>) -> Result<Self> {
        let dims = GridDims::new(gw, gh, gd)?;
        Self::from_cells(gw, gh, gd, vec![cell; dims.cell_count()])
    }

    pub fn from_cells(gw: usize, gh: usize, gd: usize, cells: Vec<Affine<T>>) -> Result<Self> {
        let dims = GridDims::new(gw, gh, gd)?;
        if cells.len() != dims.cell_count() {
            return Err(Error::ShapeMismatch(format!(
                "{gw}x{gh}x{gd} grid needs {} cells, got {}",
                dims.cell_count(),
                cells.len()
            )));
        }
        if cells.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid coefficients".into()));
        }
        Ok(Self { dims, cells })
    }

    /// Builds a grid from a flat coefficient vector in storage order.
    pub fn from_coeffs(gw: usize, gh: usize, gd: usize, coeffs: &[T]) -> Result<Self> {
        if coeffs.len() % COEFFS_PER_CELL != 0 {
            return Err(Error::ShapeMismatch(format!(
                "coefficient count {} is not a multiple of 12",
                coeffs.len()
            )));
        }
        let cells = coeffs
            .chunks_exact(COEFFS_PER_CELL)
            .map(|c| c.try_into().unwrap())
            .collect();
        Self::from_cells(gw, gh, gd, cells)
    }

    pub(crate) fn from_cells_unchecked(dims: GridDims, cells: Vec<Affine<T>>) -> Self {
        debug_assert_eq!(cells.len(), dims.cell_count());
        Self { dims, cells }
    }

    #[inline]
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    #[inline]
    pub fn gw(&self) -> usize {
        self.dims.gw
    }

    #[inline]
    pub fn gh(&self) -> usize {
        self.dims.gh
    }

    #[inline]
    pub fn gd(&self) -> usize {
        self.dims.gd
    }

    #[inline]
    pub fn cells(&self) -> &[Affine<T>] {
        &self.cells
    }

    #[inline]
    pub fn cell(&self, x: usize, y: usize, z: usize) -> &Affine<T> {
        &self.cells[self.dims.index(x, y, z)]
    }

    /// All coefficients in storage order.
    pub fn coeffs(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.iter().flatten().copied()
    }

    pub fn cast<U: Scalar>(&self) -> AffineBilateralGrid<U> {
        AffineBilateralGrid {
            dims: self.dims,
            cells: self
                .cells
                .iter()
                .map(|c| c.map(|v| U::of(v.to_f64_lossless())))
                .collect(),
        }
    }

    /// Trilinear sample at continuous cell coordinates, clamped to the grid.
    pub fn sample(&self, gx: T, gy: T, gz: T) -> Affine<T> {
        let (cells, weights) = footprint_at(self.dims, gx, gy, gz);
        let mut a = [T::zero(); 12];
        for (&c, &w) in cells.iter().zip(&weights) {
            for (acc, &v) in a.iter_mut().zip(&self.cells[c]) {
                *acc = *acc + w * v;
            }
        }
        a
    }
}

pub fn make_identity_grid(gw: usize, gh: usize, gd: usize) -> Result<AffineBilateralGrid<f32>> {
    AffineBilateralGrid::identity(gw, gh, gd)
}

/// One axis of a trilinear lookup: lower/upper lattice index and the weight of
/// the upper one.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisSample<T> {
    pub i0: usize,
    pub i1: usize,
    pub f: T,
}

#[inline(always)]
pub(crate) fn axis_sample<T: Scalar>(pos: T, n: usize) -> AxisSample<T> {
    let hi = T::of((n - 1) as f64);
    let c = pos.max(T::zero()).min(hi);
    let i0 = c.trunc_index().min(n - 1);
    AxisSample {
        i0,
        i1: (i0 + 1).min(n - 1),
        f: c - T::of(i0 as f64),
    }
}

/// Continuous cell coordinate of pixel `i` along an axis with `extent`
/// pixels and `n` cells.
#[inline(always)]
pub(crate) fn pixel_to_cell<T: Scalar>(i: usize, extent: usize, n: usize) -> T {
    (T::of(i as f64) + T::of(0.5)) / T::of(extent as f64) * T::of(n as f64) - T::of(0.5)
}

/// Continuous cell coordinate of a guidance value along the luma axis.
#[inline(always)]
pub(crate) fn luma_to_cell<T: Scalar>(z: T, gd: usize) -> T {
    z * T::of(gd as f64) - T::of(0.5)
}

/// The eight supporting cells of a continuous position and their trilinear
/// weights. Weights are non-negative and sum to one; at clamped borders the
/// duplicated cell carries weight zero.
#[inline]
pub(crate) fn footprint_at<T: Scalar>(dims: GridDims, gx: T, gy: T, gz: T) -> ([usize; 8], [T; 8]) {
    let sx = axis_sample(gx, dims.gw);
    let sy = axis_sample(gy, dims.gh);
    let sz = axis_sample(gz, dims.gd);
    let one = T::one();
    let wx = [one - sx.f, sx.f];
    let wy = [one - sy.f, sy.f];
    let wz = [one - sz.f, sz.f];
    let ix = [sx.i0, sx.i1];
    let iy = [sy.i0, sy.i1];
    let iz = [sz.i0, sz.i1];
    let mut cells = [0usize; 8];
    let mut weights = [T::zero(); 8];
    let mut k = 0;
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                cells[k] = dims.index(ix[b], iy[a], iz[c]);
                weights[k] = wy[a] * wx[b] * wz[c];
                k += 1;
            }
        }
    }
    (cells, weights)
}

/// Trilinear resampling of a grid to new dimensions, using the same
/// half-cell-centered, clamp-to-edge convention as slicing.
pub fn resample_grid<T: Scalar>(
    grid: &AffineBilateralGrid<T>,
    gw: usize,
    gh: usize,
    gd: usize,
) -> Result<AffineBilateralGrid<T>> {
    let target = GridDims::new(gw, gh, gd)?;
    if target == grid.dims {
        return Ok(grid.clone());
    }
    let mut cells = Vec::with_capacity(target.cell_count());
    for y in 0..gh {
        let gy = pixel_to_cell(y, gh, grid.gh());
        for x in 0..gw {
            let gx = pixel_to_cell(x, gw, grid.gw());
            for z in 0..gd {
                let gz = pixel_to_cell(z, gd, grid.gd());
                cells.push(grid.sample(gx, gy, gz));
            }
        }
    }
    Ok(AffineBilateralGrid::from_cells_unchecked(target, cells))
}
