use bistyle::grid::Affine;
use bistyle::{resample_grid, slice_apply, AffineBilateralGrid, GuidanceCurve, ImagePlane};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn luma(p: [f64; 3]) -> f64 {
    (0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]).clamp(0.0, 1.0)
}

fn random_image(r: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePlane<f64> {
    ImagePlane::new(w, h, (0..w * h * 3).map(|_| r.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Cells sampled from `A0 + u*Ax + v*Ay + l*Az` at half-cell centers.
fn affine_field_grid(r: &mut ChaCha8Rng, gw: usize, gh: usize, gd: usize) -> AffineBilateralGrid<f64> {
    let basis: [Affine<f64>; 4] = std::array::from_fn(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0)));
    let mut cells = Vec::with_capacity(gw * gh * gd);
    for y in 0..gh {
        for x in 0..gw {
            for z in 0..gd {
                let u = [(x as f64 + 0.5) / gw as f64, (y as f64 + 0.5) / gh as f64, (z as f64 + 0.5) / gd as f64];
                cells.push(std::array::from_fn(|k| {
                    basis[0][k] + u[0] * basis[1][k] + u[1] * basis[2][k] + u[2] * basis[3][k]
                }));
            }
        }
    }
    AffineBilateralGrid::from_cells(gw, gh, gd, cells).unwrap()
}

/// True when the footprint of `u` on an `n`-cell axis avoids both border cells.
/// Border cells of an upsampled grid hold clamped copies, not field values.
fn interior(u: f64, n: usize) -> bool {
    let c = u * n as f64 - 0.5;
    c >= 1.0 && c <= (n - 2) as f64
}

#[test]
fn upsampling_an_affine_field_is_exact_away_from_the_border() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let grid = affine_field_grid(&mut r, 4, 4, 4);
        let up = resample_grid(&grid, 8, 8, 8).unwrap();
        let img = random_image(&mut r, 40, 30);
        let (a, b) = (slice_apply(&grid, &img, &GuidanceCurve::FixedLuma), slice_apply(&up, &img, &GuidanceCurve::FixedLuma));
        let mut checked = 0;
        for y in 0..30 {
            for x in 0..40 {
                let p = img.pixel(x, y);
                let inside = interior((x as f64 + 0.5) / 40.0, 8) && interior((y as f64 + 0.5) / 30.0, 8) && interior(luma(p), 8);
                if inside {
                    checked += 1;
                    for c in 0..3 {
                        assert!((a.pixel(x, y)[c] - b.pixel(x, y)[c]).abs() <= 1e-12);
                    }
                }
            }
        }
        assert!(checked > 100);
    }
}

#[test]
fn upsampling_a_random_grid_changes_the_sliced_output() {
    // Re-interpolating a piecewise-trilinear field on a finer lattice is not
    // the identity, so 4x4x4 -> 8x8x8 does not reproduce the original render.
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let cells = (0..64).map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0))).collect();
    let grid = AffineBilateralGrid::<f64>::from_cells(4, 4, 4, cells).unwrap();
    let up = resample_grid(&grid, 8, 8, 8).unwrap();
    let img = random_image(&mut r, 32, 32);
    let a = slice_apply(&grid, &img, &GuidanceCurve::FixedLuma);
    let b = slice_apply(&up, &img, &GuidanceCurve::FixedLuma);
    let worst = a.as_slice().iter().zip(b.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(worst > 1e-3, "max difference {worst}");
}

#[test]
fn odd_factor_upsampling_keeps_coarse_cells_it_lands_on() {
    // With an odd factor k, fine cell k*i + (k-1)/2 sits exactly on coarse cell i.
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let cells = (0..3 * 2 * 4).map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0))).collect();
    let grid = AffineBilateralGrid::<f64>::from_cells(3, 2, 4, cells).unwrap();
    let up = resample_grid(&grid, 9, 6, 12).unwrap();
    for y in 0..2 {
        for x in 0..3 {
            for z in 0..4 {
                let (a, b) = (grid.cell(x, y, z), up.cell(3 * x + 1, 3 * y + 1, 3 * z + 1));
                for (p, q) in a.iter().zip(b) {
                    assert!((p - q).abs() <= 1e-12);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn resampled_coefficients_stay_within_source_range(
        seed in any::<u64>(),
        src in (1usize..=5, 1usize..=5, 1usize..=5),
        dst in (1usize..=9, 1usize..=9, 1usize..=9),
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let cells = (0..src.0 * src.1 * src.2).map(|_| std::array::from_fn(|_| r.gen_range(-3.0..3.0))).collect();
        let grid = AffineBilateralGrid::<f64>::from_cells(src.0, src.1, src.2, cells).unwrap();
        let out = resample_grid(&grid, dst.0, dst.1, dst.2).unwrap();
        prop_assert_eq!((out.gw(), out.gh(), out.gd()), dst);
        for k in 0..12 {
            let lo = grid.cells().iter().map(|c| c[k]).fold(f64::INFINITY, f64::min);
            let hi = grid.cells().iter().map(|c| c[k]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out.cells().iter().all(|c| c[k] >= lo - 1e-12 && c[k] <= hi + 1e-12));
        }
    }
}
