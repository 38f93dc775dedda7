//! Bilateral-space Laplacian smoothness energy over six-connected cells.
//!
//! `E(grid) = sum_s sum_{t in N(s)} ||grid[s] - grid[t]||_F^2`, where `N(s)` are
//! the existing axis neighbors of `s` in (x, y, luma). The sum runs over
//! ordered pairs, so every adjacent pair contributes twice. Its gradient with
//! respect to cell `s` is `4 * (deg(s) * grid[s] - sum_{t in N(s)} grid[t])`.

use crate::grid::{Affine, AffineBilateralGrid, GridDims};
use crate::scalar::Scalar;

pub fn laplacian_energy<T: Scalar>(grid: &AffineBilateralGrid<T>) -> f64 {
    let dims = grid.dims();
    let cells = grid.cells();
    let mut sum = 0.0f64;
    // Each unordered pair once via forward neighbors, doubled at the end.
    for y in 0..dims.gh {
        for x in 0..dims.gw {
            for z in 0..dims.gd {
                let s = &cells[dims.index(x, y, z)];
                if x + 1 < dims.gw {
                    sum += sq_dist(s, &cells[dims.index(x + 1, y, z)]);
                }
                if y + 1 < dims.gh {
                    sum += sq_dist(s, &cells[dims.index(x, y + 1, z)]);
                }
                if z + 1 < dims.gd {
                    sum += sq_dist(s, &cells[dims.index(x, y, z + 1)]);
                }
            }
        }
    }
    2.0 * sum
}

fn sq_dist<T: Scalar>(a: &Affine<T>, b: &Affine<T>) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = p.to_f64_lossless() - q.to_f64_lossless();
            d * d
        })
        .sum()
}

/// `dst[s] += scale * (deg(s) * src[s] - sum_{t in N(s)} src[t])` for every cell.
pub(crate) fn add_graph_laplacian<T: Scalar>(dims: GridDims, src: &[Affine<T>], dst: &mut [Affine<T>], scale: T) {
    debug_assert_eq!(src.len(), dims.cell_count());
    debug_assert_eq!(dst.len(), dims.cell_count());
    for y in 0..dims.gh {
        for x in 0..dims.gw {
            for z in 0..dims.gd {
                let si = dims.index(x, y, z);
                let mut acc = [T::zero(); 12];
                let mut visit = |ti: usize| {
                    for k in 0..12 {
                        acc[k] = acc[k] + (src[si][k] - src[ti][k]);
                    }
                };
                if x > 0 {
                    visit(dims.index(x - 1, y, z));
                }
                if x + 1 < dims.gw {
                    visit(dims.index(x + 1, y, z));
                }
                if y > 0 {
                    visit(dims.index(x, y - 1, z));
                }
                if y + 1 < dims.gh {
                    visit(dims.index(x, y + 1, z));
                }
                if z > 0 {
                    visit(dims.index(x, y, z - 1));
                }
                if z + 1 < dims.gd {
                    visit(dims.index(x, y, z + 1));
                }
                for k in 0..12 {
                    dst[si][k] = dst[si][k] + scale * acc[k];
                }
            }
        }
    }
}
