//! Regularized least-squares fit of an affine bilateral grid to a low-resolution
//! input/output pair.
//!
//! The fitted grid minimizes
//!
//! ```text
//! E(grid) = sum_p || slice(grid, input)[p] - output[p] ||^2 + lambda_r * laplacian_energy(grid)
//! ```
//!
//! Slicing is linear in the grid, so `E` is a sparse linear least-squares
//! problem. Its normal equations `(S^T S + 2 lambda_r L) x = S^T o` are solved
//! matrix-free with conjugate gradients, where `S` is the slicing operator
//! (forward = slice, adjoint = splat) and `L` the six-connected graph
//! Laplacian. With `lambda_r > 0` CG is preconditioned with the 4x4 diagonal
//! blocks of the normal matrix (one per cell, shared by the three output
//! rows), which absorbs the strong color correlation inside a luma bin.
//!
//! The iteration starts from the identity grid. With `lambda_r = 0` the normal
//! matrix is singular wherever a cell's colors do not span an affine basis, and
//! a block preconditioner would push the iterate along those null directions.
//! Plain CG is used instead: its iterates stay in `identity + range(A)`, so
//! directions the data does not constrain, including cells that receive no
//! pixels, keep the initialization.

use std::time::Instant;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::exec::{fixed_ranges, map_ordered, Execution};
use crate::grid::{footprint_at, identity_affine, luma_to_cell, pixel_to_cell, Affine, AffineBilateralGrid, GridDims};
use crate::guidance::GuidanceCurve;
use crate::image::ImagePlane;
use crate::laplacian::{add_graph_laplacian, laplacian_energy};
use crate::slice::slice_apply;

pub const DEFAULT_LAMBDA_R: f64 = 0.15;
pub const DEFAULT_MAX_ITERS: usize = 200;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct FitProblem {
    pub input_lowres: ImagePlane<f32>,
    pub output_lowres: ImagePlane<f32>,
    pub curve: GuidanceCurve,
    pub gw: usize,
    pub gh: usize,
    pub gd: usize,
    pub lambda_r: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl FitProblem {
    /// A 16x16x8 fit with `lambda_r = 0.15`, `tol = 1e-6` and at most 200
    /// iterations.
    pub fn new(input_lowres: ImagePlane<f32>, output_lowres: ImagePlane<f32>) -> Self {
        Self {
            input_lowres,
            output_lowres,
            curve: GuidanceCurve::FixedLuma,
            gw: 16,
            gh: 16,
            gd: 8,
            lambda_r: DEFAULT_LAMBDA_R,
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_grid_dims(mut self, gw: usize, gh: usize, gd: usize) -> Self {
        self.gw = gw;
        self.gh = gh;
        self.gd = gd;
        self
    }

    pub fn with_lambda_r(mut self, lambda_r: f64) -> Self {
        self.lambda_r = lambda_r;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_curve(mut self, curve: GuidanceCurve) -> Self {
        self.curve = curve;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.input_lowres, &self.output_lowres);
        if (a.width(), a.height()) != (b.width(), b.height()) {
            return Err(Error::ShapeMismatch(format!(
                "fit input is {}x{} but output is {}x{}",
                a.width(),
                a.height(),
                b.width(),
                b.height()
            )));
        }
        GridDims::new(self.gw, self.gh, self.gd)?;
        if !(self.lambda_r.is_finite() && self.lambda_r >= 0.0) {
            return Err(Error::InvalidParameter(format!("lambda_r must be >= 0, got {}", self.lambda_r)));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", self.tol)));
        }
        self.curve.validate()
    }

    /// The fit objective evaluated by rendering: data term plus weighted
    /// Laplacian energy.
    pub fn objective<T: crate::Scalar>(&self, grid: &AffineBilateralGrid<T>) -> f64 {
        let g = grid.cast::<f64>();
        let input = self.input_lowres.cast::<f64>();
        let target = self.output_lowres.cast::<f64>();
        let rendered = slice_apply(&g, &input, &self.curve);
        let data: f64 = rendered
            .as_slice()
            .iter()
            .zip(target.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        data + self.lambda_r * laplacian_energy(&g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` of the normal equations at the returned grid.
    pub relative_residual: f64,
    pub converged: bool,
    pub data_term: f64,
    pub laplacian_energy: f64,
    pub fit_seconds: f64,
}

pub fn fit_grid(problem: &FitProblem) -> Result<(AffineBilateralGrid<f32>, FitReport)> {
    fit_grid_with(problem, Execution::default())
}

pub fn fit_grid_with(problem: &FitProblem, exec: Execution) -> Result<(AffineBilateralGrid<f32>, FitReport)> {
    let (grid, report) = fit_grid_f64(problem, exec)?;
    Ok((grid.cast(), report))
}

/// Same as [`fit_grid`] but returns the solver's double-precision grid.
pub fn fit_grid_f64(problem: &FitProblem, exec: Execution) -> Result<(AffineBilateralGrid<f64>, FitReport)> {
    problem.validate()?;
    let start = Instant::now();
    let dims = GridDims::new(problem.gw, problem.gh, problem.gd)?;
    let system = NormalSystem::build(problem, dims, exec);
    if system.pixels.is_empty() {
        return Err(Error::Degenerate("fit problem has no pixels".into()));
    }

    let n = dims.cell_count();
    let mut x: Vec<Affine<f64>> = vec![identity_affine(); n];
    let b = system.rhs();
    let b_norm = norm(&b);
    let reference = if b_norm > 0.0 { b_norm } else { 1.0 };

    let mut r = b.clone();
    let ax = system.apply(&x);
    axpy(-1.0, &ax, &mut r);
    let mut rel = norm(&r) / reference;
    let mut iterations = 0;

    if rel > problem.tol && problem.max_iters > 0 {
        let mut z = system.precondition(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < problem.max_iters {
            let q = system.apply(&p);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                break;
            }
            let alpha = rz / pq;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &q, &mut r);
            iterations += 1;
            rel = norm(&r) / reference;
            if rel <= problem.tol {
                break;
            }
            z = system.precondition(&r);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for (pi, zi) in p.iter_mut().zip(&z) {
                for k in 0..12 {
                    pi[k] = zi[k] + beta * pi[k];
                }
            }
        }
        // Report the true residual rather than the recurrence.
        let mut true_r = b.clone();
        axpy(-1.0, &system.apply(&x), &mut true_r);
        rel = norm(&true_r) / reference;
    }

    let grid = AffineBilateralGrid::from_cells(dims.gw, dims.gh, dims.gd, x)
        .map_err(|_| Error::NonFinite("fitted grid (solver diverged)".into()))?;
    let report = FitReport {
        iterations,
        relative_residual: rel,
        converged: rel <= problem.tol,
        data_term: system.data_term(grid.cells()),
        laplacian_energy: laplacian_energy(&grid),
        fit_seconds: start.elapsed().as_secs_f64(),
    };
    Ok((grid, report))
}

/// One low-res pixel's row of the slicing operator.
struct PixelTerm {
    cells: [usize; 8],
    weights: [f64; 8],
    color: [f64; 4],
    target: [f64; 3],
}

struct NormalSystem {
    dims: GridDims,
    exec: Execution,
    lambda_r: f64,
    pixels: Vec<PixelTerm>,
    precond: Option<Vec<Matrix4<f64>>>,
}

impl NormalSystem {
    fn build(problem: &FitProblem, dims: GridDims, exec: Execution) -> Self {
        let input = &problem.input_lowres;
        let output = &problem.output_lowres;
        let (w, h) = (input.width(), input.height());
        let mut pixels = Vec::with_capacity(w * h);
        for y in 0..h {
            let gy = pixel_to_cell::<f64>(y, h, dims.gh);
            for x in 0..w {
                let [r, g, b] = input.pixel(x, y).map(f64::from);
                let gx = pixel_to_cell::<f64>(x, w, dims.gw);
                let gz = luma_to_cell(problem.curve.eval(r, g, b), dims.gd);
                let (cells, weights) = footprint_at(dims, gx, gy, gz);
                pixels.push(PixelTerm {
                    cells,
                    weights,
                    color: [r, g, b, 1.0],
                    target: output.pixel(x, y).map(f64::from),
                });
            }
        }

        let mut blocks = vec![Matrix4::<f64>::zeros(); dims.cell_count()];
        for p in &pixels {
            let v = Vector4::from(p.color);
            let outer = v * v.transpose();
            for (&c, &wt) in p.cells.iter().zip(&p.weights) {
                if wt != 0.0 {
                    blocks[c] += outer * (wt * wt);
                }
            }
        }
        for y in 0..dims.gh {
            for x in 0..dims.gw {
                for z in 0..dims.gd {
                    let c = dims.index(x, y, z);
                    let reg = 2.0 * problem.lambda_r * dims.degree(x, y, z) as f64;
                    blocks[c] += Matrix4::identity() * reg;
                }
            }
        }
        let precond = (problem.lambda_r > 0.0).then(|| blocks.into_iter().map(invert_spd_block).collect());

        Self {
            dims,
            exec,
            lambda_r: problem.lambda_r,
            pixels,
            precond,
        }
    }

    /// Splats `f(pixel, predicted A x~) (x) x~` over all pixels, reduced in a
    /// fixed order.
    fn splat<F>(&self, f: F) -> Vec<Affine<f64>>
    where
        F: Fn(&PixelTerm) -> [f64; 3] + Send + Sync,
    {
        let n = self.dims.cell_count();
        let ranges = fixed_ranges(self.pixels.len(), 64);
        let partials = map_ordered(self.exec, ranges.len(), |i| {
            let mut acc = vec![[0.0f64; 12]; n];
            for p in &self.pixels[ranges[i].clone()] {
                let e = f(p);
                for (&c, &wt) in p.cells.iter().zip(&p.weights) {
                    if wt == 0.0 {
                        continue;
                    }
                    let cell = &mut acc[c];
                    for row in 0..3 {
                        let s = wt * e[row];
                        for col in 0..4 {
                            cell[row * 4 + col] += s * p.color[col];
                        }
                    }
                }
            }
            acc
        });
        let mut total = vec![[0.0f64; 12]; n];
        for part in &partials {
            axpy(1.0, part, &mut total);
        }
        total
    }

    fn rhs(&self) -> Vec<Affine<f64>> {
        self.splat(|p| p.target)
    }

    fn apply(&self, x: &[Affine<f64>]) -> Vec<Affine<f64>> {
        let mut out = self.splat(|p| predict(p, x));
        if self.lambda_r > 0.0 {
            add_graph_laplacian(self.dims, x, &mut out, 2.0 * self.lambda_r);
        }
        out
    }

    fn precondition(&self, r: &[Affine<f64>]) -> Vec<Affine<f64>> {
        let Some(precond) = &self.precond else {
            return r.to_vec();
        };
        r.iter()
            .zip(precond)
            .map(|(cell, m)| {
                let mut z = [0.0; 12];
                for row in 0..3 {
                    let v = m * Vector4::new(cell[4 * row], cell[4 * row + 1], cell[4 * row + 2], cell[4 * row + 3]);
                    z[4 * row..4 * row + 4].copy_from_slice(v.as_slice());
                }
                z
            })
            .collect()
    }

    fn data_term(&self, x: &[Affine<f64>]) -> f64 {
        self.pixels
            .iter()
            .map(|p| {
                let pred = predict(p, x);
                (0..3).map(|c| (pred[c] - p.target[c]).powi(2)).sum::<f64>()
            })
            .sum()
    }
}

#[inline]
fn predict(p: &PixelTerm, x: &[Affine<f64>]) -> [f64; 3] {
    let mut a = [0.0f64; 12];
    for (&c, &wt) in p.cells.iter().zip(&p.weights) {
        if wt == 0.0 {
            continue;
        }
        for k in 0..12 {
            a[k] += wt * x[c][k];
        }
    }
    let v = &p.color;
    [
        a[0] * v[0] + a[1] * v[1] + a[2] * v[2] + a[3],
        a[4] * v[0] + a[5] * v[1] + a[6] * v[2] + a[7],
        a[8] * v[0] + a[9] * v[1] + a[10] * v[2] + a[11],
    ]
}

/// Inverse of a symmetric positive semi-definite block, with a small ridge so
/// rank-deficient blocks (collinear colors, empty cells) stay invertible.
fn invert_spd_block(m: Matrix4<f64>) -> Matrix4<f64> {
    let scale = m.trace() / 4.0;
    if !(scale > 0.0) {
        return Matrix4::identity();
    }
    let ridged = m + Matrix4::identity() * (scale * 1e-9);
    match ridged.cholesky() {
        Some(ch) => ch.inverse(),
        None => Matrix4::identity() / scale,
    }
}

fn dot(a: &[Affine<f64>], b: &[Affine<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| x * y)
        .sum()
}

fn norm(a: &[Affine<f64>]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
fn axpy(alpha: f64, x: &[Affine<f64>], y: &mut [Affine<f64>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        for k in 0..12 {
            yi[k] += alpha * xi[k];
        }
    }
}
