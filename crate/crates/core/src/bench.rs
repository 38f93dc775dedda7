//! Render throughput measurement.
//!
//! Only rendering is timed: image synthesis, grid construction and any
//! encode/decode happen outside the timed region. The output buffer is
//! allocated once and reused across runs, as in a frame loop. The first
//! `warmup` runs are discarded.

use std::time::Instant;

use crate::exec::Execution;
use crate::guidance::GuidanceCurve;
use crate::image::ImagePlane;
use crate::slice::slice_apply_into;
use crate::synth;

#[derive(Clone, Debug)]
pub struct RenderBenchConfig {
    pub width: usize,
    pub height: usize,
    pub gw: usize,
    pub gh: usize,
    pub gd: usize,
    pub iters: usize,
    pub warmup: usize,
    pub exec: Execution,
}

impl Default for RenderBenchConfig {
    fn default() -> Self {
        Self {
            width: 4000,
            height: 3000,
            gw: 16,
            gh: 16,
            gd: 8,
            iters: 9,
            warmup: 1,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<f64>,
    pub median_seconds: f64,
    pub min_seconds: f64,
}

impl BenchReport {
    pub fn megapixels(&self) -> f64 {
        (self.width * self.height) as f64 / 1e6
    }

    /// Throughput at the median frame time.
    pub fn mpix_per_second(&self) -> f64 {
        self.megapixels() / self.median_seconds
    }

    pub fn ms_per_frame(&self) -> f64 {
        self.median_seconds * 1e3
    }
}

pub fn median(samples: &[f64]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn run_render_bench(cfg: &RenderBenchConfig) -> crate::Result<BenchReport> {
    if [cfg.width, cfg.height, cfg.gw, cfg.gh, cfg.gd, cfg.iters].contains(&0) {
        return Err(crate::Error::InvalidParameter("bench sizes, grid dims and iters must be positive".into()));
    }
    let img = synth::smooth_image::<f32>(cfg.width, cfg.height, 17);
    let grid = synth::perturbed_identity::<f32>(cfg.gw, cfg.gh, cfg.gd, 0.2, 23);
    let curve = GuidanceCurve::FixedLuma;
    let mut out = ImagePlane::filled(cfg.width, cfg.height, [0.0f32; 3])?;
    for _ in 0..cfg.warmup {
        slice_apply_into(&grid, &img, &curve, cfg.exec, &mut out)?;
        std::hint::black_box(&out);
    }
    let mut samples = Vec::with_capacity(cfg.iters);
    for _ in 0..cfg.iters {
        let t = Instant::now();
        slice_apply_into(&grid, &img, &curve, cfg.exec, &mut out)?;
        samples.push(t.elapsed().as_secs_f64());
        std::hint::black_box(&out);
    }
    Ok(BenchReport {
        width: cfg.width,
        height: cfg.height,
        median_seconds: median(&samples),
        min_seconds: samples.iter().copied().fold(f64::INFINITY, f64::min),
        samples,
    })
}
