use bistyle::{
    laplacian_backward, laplacian_energy, slice_apply, slice_backward, AffineBilateralGrid, GuidanceCurve, ImagePlane,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_grid(r: &mut ChaCha8Rng, gw: usize, gh: usize, gd: usize) -> AffineBilateralGrid<f64> {
    let cells = (0..gw * gh * gd)
        .map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0)))
        .collect();
    AffineBilateralGrid::from_cells(gw, gh, gd, cells).unwrap()
}

fn random_image(r: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane<f64> {
    ImagePlane::new(w, h, (0..w * h * 3).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap()
}

fn perturbed(grid: &AffineBilateralGrid<f64>, k: usize, d: f64) -> AffineBilateralGrid<f64> {
    let mut c: Vec<f64> = grid.coeffs().collect();
    c[k] += d;
    AffineBilateralGrid::from_coeffs(grid.gw(), grid.gh(), grid.gd(), &c).unwrap()
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

/// All ordered cell pairs that differ by one step along exactly one axis.
fn all_pairs_laplacian(grid: &AffineBilateralGrid<f64>) -> f64 {
    let (gw, gh, gd) = (grid.gw(), grid.gh(), grid.gd());
    let coords: Vec<(i64, i64, i64)> = (0..gh)
        .flat_map(|y| (0..gw).flat_map(move |x| (0..gd).map(move |z| (x as i64, y as i64, z as i64))))
        .collect();
    let mut total = 0.0;
    for &(x0, y0, z0) in &coords {
        for &(x1, y1, z1) in &coords {
            let offs = [(x1 - x0).abs(), (y1 - y0).abs(), (z1 - z0).abs()];
            if offs.iter().sum::<i64>() != 1 {
                continue;
            }
            let a = grid.cell(x0 as usize, y0 as usize, z0 as usize);
            let b = grid.cell(x1 as usize, y1 as usize, z1 as usize);
            total += a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>();
        }
    }
    total
}

#[test]
fn laplacian_matches_all_pairs_oracle_on_3x3x2() {
    for seed in 0..10 {
        let grid = random_grid(&mut ChaCha8Rng::seed_from_u64(seed), 3, 3, 2);
        let (got, want) = (laplacian_energy(&grid), all_pairs_laplacian(&grid));
        assert!((got - want).abs() <= 1e-12 * want, "{got} vs {want}");
    }
}

#[test]
fn laplacian_gradient_matches_finite_differences() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for (gw, gh, gd) in [(3, 4, 2), (1, 1, 5), (4, 4, 4)] {
        let grid = random_grid(&mut r, gw, gh, gd);
        let g = laplacian_backward(&grid);
        for (k, analytic) in g.coeffs().enumerate() {
            let fd = (laplacian_energy(&perturbed(&grid, k, 1e-4)) - laplacian_energy(&perturbed(&grid, k, -1e-4))) / 2e-4;
            assert!(rel_err(analytic, fd) <= 1e-6, "coeff {k}: {analytic} vs {fd}");
        }
    }
}

#[test]
fn laplacian_gradient_of_identity_is_zero() {
    let grid = AffineBilateralGrid::<f64>::identity(4, 3, 5).unwrap();
    assert_eq!(laplacian_backward(&grid).max_abs(), 0.0);
}

#[test]
fn slice_gradient_matches_finite_differences_of_quadratic() {
    let mut r = ChaCha8Rng::seed_from_u64(11);
    let grid = random_grid(&mut r, 4, 4, 4);
    let img = random_image(&mut r, 8, 8);
    let curve = GuidanceCurve::FixedLuma;
    let qa: Vec<f64> = (0..192).map(|_| r.gen_range(-1.0..1.0)).collect();
    let qb: Vec<f64> = (0..192).map(|_| r.gen_range(-1.0..1.0)).collect();
    let loss = |g: &AffineBilateralGrid<f64>| -> f64 {
        let out = slice_apply(g, &img, &curve);
        out.as_slice().iter().enumerate().map(|(i, o)| qa[i] * o * o + qb[i] * o).sum()
    };
    let out = slice_apply(&grid, &img, &curve);
    let up = ImagePlane::new(8, 8, out.as_slice().iter().enumerate().map(|(i, o)| 2.0 * qa[i] * o + qb[i]).collect()).unwrap();
    let g = slice_backward(&grid, &img, &curve, &up).unwrap();
    let mut worst = 0.0f64;
    for (k, analytic) in g.coeffs().enumerate() {
        let fd = (loss(&perturbed(&grid, k, 1e-4)) - loss(&perturbed(&grid, k, -1e-4))) / 2e-4;
        worst = worst.max(rel_err(analytic, fd));
    }
    assert!(worst <= 1e-3, "max relative error {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// `<slice(grid), u> = <grid, slice_backward(u)>`: slicing is linear in
    /// the grid coefficients and the backward pass is its transpose.
    #[test]
    fn backward_is_the_adjoint_of_slicing(
        seed in any::<u64>(),
        dims in (1usize..=5, 1usize..=5, 1usize..=5),
        size in (1usize..=20, 1usize..=20),
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let grid = random_grid(&mut r, dims.0, dims.1, dims.2);
        let img = random_image(&mut r, size.0, size.1);
        let up = ImagePlane::new(size.0, size.1, (0..size.0 * size.1 * 3).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap();
        let curve = GuidanceCurve::FixedLuma;
        let lhs: f64 = slice_apply(&grid, &img, &curve).as_slice().iter().zip(up.as_slice()).map(|(a, b)| a * b).sum();
        let rhs = slice_backward(&grid, &img, &curve, &up).unwrap().dot(grid.cells());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{} vs {}", lhs, rhs);
    }

    /// The energy is a quadratic form with gradient `2 L x`, so
    /// `<grad, grid> = 2 * energy`.
    #[test]
    fn laplacian_gradient_is_consistent_with_energy(seed in any::<u64>(), dims in (1usize..=6, 1usize..=6, 1usize..=6)) {
        let grid = random_grid(&mut ChaCha8Rng::seed_from_u64(seed), dims.0, dims.1, dims.2);
        let e = laplacian_energy(&grid);
        let g = laplacian_backward(&grid).dot(grid.cells());
        prop_assert!((g - 2.0 * e).abs() <= 1e-10 * (1.0 + e));
    }
}
