//! Affine bilateral grids for photorealistic style transfer.
//!
//! The crate is organised around the two streams of a bilateral-grid
//! stylizer:
//!
//! * a low-resolution stream that produces a grid, here by matching channel
//!   statistics ([`stats`]) and fitting a regularized grid to the result
//!   ([`fit`]);
//! * a full-resolution rendering stream that slices the grid at every pixel
//!   and applies the interpolated 3x4 color transform ([`slice`]).
//!
//! Slicing is linear in the grid coefficients, so [`diff`] provides its exact
//! adjoint together with the gradient of the bilateral-space Laplacian
//! smoothness energy ([`laplacian`]). Pixel loops run on rayon when the
//! `parallel` feature is enabled (the default) and fall back to plain
//! iterators otherwise; results are bit-identical either way.

pub mod bench;
pub mod diff;
mod error;
mod exec;
pub mod fit;
pub mod fmap;
pub mod gradcheck;
pub mod grid;
pub mod gridfile;
pub mod guidance;
pub mod image;
pub mod io;
pub mod laplacian;
pub mod pipeline;
mod scalar;
pub mod slice;
pub mod stats;
pub mod synth;
mod wire;

pub use crate::diff::{laplacian_backward, slice_backward, GridGradient};
pub use crate::error::{Error, Result};
pub use crate::exec::Execution;
pub use crate::fit::{fit_grid, FitProblem, FitReport};
pub use crate::grid::{make_identity_grid, resample_grid, AffineBilateralGrid, Affine};
pub use crate::gridfile::GridFile;
pub use crate::guidance::GuidanceCurve;
pub use crate::image::ImagePlane;
pub use crate::laplacian::laplacian_energy;
pub use crate::pipeline::{stylize, StylizeConfig, Stylized};
pub use crate::scalar::Scalar;
pub use crate::slice::{slice_apply, slice_apply_into, slice_apply_with};
pub use crate::stats::{FeatureMap, FeatureMapSet, LossWeights};
