//! Finite-difference verification of the analytic grid gradients.
//!
//! The objective is a random quadratic of the sliced output,
//! `sum_p sum_c a[p,c] * out[p,c]^2 + b[p,c] * out[p,c]`, so its gradient with
//! respect to the output is `2 a out + b`. Every grid coefficient is checked
//! against a central difference in `f64`.

use rand::Rng;

use crate::diff::{laplacian_backward, slice_backward};
use crate::grid::AffineBilateralGrid;
use crate::guidance::GuidanceCurve;
use crate::image::ImagePlane;
use crate::laplacian::laplacian_energy;
use crate::slice::slice_apply;
use crate::synth;

pub const STEP: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct GradcheckReport {
    pub seed: u64,
    pub grid_dims: (usize, usize, usize),
    pub image_dims: (usize, usize),
    pub coefficients_checked: usize,
    pub slice_max_rel_err: f64,
    pub laplacian_max_rel_err: f64,
}

impl GradcheckReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.slice_max_rel_err <= tol && self.laplacian_max_rel_err <= tol
    }
}

/// Relative error with a floor on the denominator so coefficients whose true
/// gradient is zero are judged on absolute error.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

struct Quadratic {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Quadratic {
    fn value(&self, out: &ImagePlane<f64>) -> f64 {
        out.as_slice()
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&o, (&a, &b))| a * o * o + b * o)
            .sum()
    }

    fn upstream(&self, out: &ImagePlane<f64>) -> ImagePlane<f64> {
        let data = out
            .as_slice()
            .iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&o, (&a, &b))| 2.0 * a * o + b)
            .collect();
        ImagePlane::new(out.width(), out.height(), data).expect("finite upstream")
    }
}

/// Checks slice and Laplacian gradients on a 4x4x4 grid and an 8x8 image.
pub fn gradcheck(seed: u64) -> GradcheckReport {
    gradcheck_sized(seed, (4, 4, 4), (8, 8))
}

pub fn gradcheck_sized(seed: u64, grid_dims: (usize, usize, usize), image_dims: (usize, usize)) -> GradcheckReport {
    let (gw, gh, gd) = grid_dims;
    let (w, h) = image_dims;
    let grid = synth::perturbed_identity::<f64>(gw, gh, gd, 0.3, seed);
    let img = synth::noise_image::<f64>(w, h, 0.0, 1.0, seed.wrapping_add(1));
    let mut rng = synth::rng(seed.wrapping_add(2));
    let n = w * h * 3;
    let objective = Quadratic {
        a: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        b: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    let curve = GuidanceCurve::FixedLuma;

    let out = slice_apply(&grid, &img, &curve);
    let analytic = slice_backward(&grid, &img, &curve, &objective.upstream(&out)).expect("shapes agree");
    let analytic_lap = laplacian_backward(&grid);

    let coeffs: Vec<f64> = grid.coeffs().collect();
    let perturbed = |k: usize, delta: f64| {
        let mut c = coeffs.clone();
        c[k] += delta;
        AffineBilateralGrid::from_coeffs(gw, gh, gd, &c).expect("finite grid")
    };

    let mut slice_err = 0.0f64;
    let mut lap_err = 0.0f64;
    for (k, (ga, gl)) in analytic.coeffs().zip(analytic_lap.coeffs()).enumerate() {
        let plus = perturbed(k, STEP);
        let minus = perturbed(k, -STEP);
        let fd = (objective.value(&slice_apply(&plus, &img, &curve)) - objective.value(&slice_apply(&minus, &img, &curve)))
            / (2.0 * STEP);
        let fd_lap = (laplacian_energy(&plus) - laplacian_energy(&minus)) / (2.0 * STEP);
        slice_err = slice_err.max(relative_error(ga, fd));
        lap_err = lap_err.max(relative_error(gl, fd_lap));
    }

    GradcheckReport {
        seed,
        grid_dims,
        image_dims,
        coefficients_checked: coeffs.len(),
        slice_max_rel_err: slice_err,
        laplacian_max_rel_err: lap_err,
    }
}
