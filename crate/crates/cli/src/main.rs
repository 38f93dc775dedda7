//! `bistyle` command-line front end.
//!
//! Every subcommand prints a one-line JSON report on stdout. Failures print a
//! one-line JSON object on stderr and exit with status 1 (2 for usage errors).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bistyle::bench::{run_render_bench, RenderBenchConfig};
use bistyle::fit::{DEFAULT_LAMBDA_R, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use bistyle::gradcheck::gradcheck;
use bistyle::io::{read_png, write_png, BitDepth};
use bistyle::pipeline::{apply_grid_file, frame_paths};
use bistyle::{fit_grid, fmap, stylize, Error, Execution, FitProblem, FitReport, GridFile, StylizeConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "bistyle", version, about = "Affine bilateral grid style transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct GridDimArgs {
    #[arg(long, default_value_t = 16)]
    gw: usize,
    #[arg(long, default_value_t = 16)]
    gh: usize,
    #[arg(long, default_value_t = 8)]
    gd: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, Default)]
enum Depth {
    #[default]
    #[value(name = "8")]
    Eight,
    #[value(name = "16")]
    Sixteen,
}

impl From<Depth> for BitDepth {
    fn from(d: Depth) -> Self {
        match d {
            Depth::Eight => BitDepth::Eight,
            Depth::Sixteen => BitDepth::Sixteen,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stylize a content image with the color statistics of a style image.
    Stylize {
        #[arg(long)]
        content: PathBuf,
        #[arg(long)]
        style: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 256)]
        lowres: usize,
        #[command(flatten)]
        dims: GridDimArgs,
        #[arg(long = "lambda-r", default_value_t = DEFAULT_LAMBDA_R)]
        lambda_r: f64,
        #[arg(long)]
        clamp: bool,
        #[arg(long = "features-content", requires = "features_style")]
        features_content: Option<PathBuf>,
        #[arg(long = "features-style", requires = "features_content")]
        features_style: Option<PathBuf>,
        #[arg(long = "save-grid")]
        save_grid: Option<PathBuf>,
        #[arg(long = "bit-depth", value_enum, default_value = "8")]
        bit_depth: Depth,
    },
    /// Fit a grid mapping one image onto another and write it as a grid file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[command(flatten)]
        dims: GridDimArgs,
        #[arg(long = "lambda-r", default_value_t = DEFAULT_LAMBDA_R)]
        lambda_r: f64,
        #[arg(long = "max-iters", default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Slice a grid file over an image.
    Apply {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        clamp: bool,
        #[arg(long = "bit-depth", value_enum, default_value = "8")]
        bit_depth: Depth,
    },
    /// Time full-resolution slicing on a synthetic image.
    Bench {
        #[arg(long)]
        width: usize,
        #[arg(long)]
        height: usize,
        #[command(flatten)]
        dims: GridDimArgs,
        #[arg(long, default_value_t = 9)]
        iters: usize,
        #[arg(long)]
        sequential: bool,
    },
    /// Compare analytic grid gradients with central differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stylize every PNG in a directory.
    Frames {
        #[arg(long, required_unless_present = "style", conflicts_with = "style")]
        grid: Option<PathBuf>,
        #[arg(long)]
        style: Option<PathBuf>,
        #[arg(long = "per-frame", requires = "style")]
        per_frame: bool,
        #[arg(long = "in-dir")]
        in_dir: PathBuf,
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
        #[arg(long)]
        clamp: bool,
    },
}

fn fit_json(r: &FitReport) -> Value {
    json!({
        "iterations": r.iterations,
        "relative_residual": r.relative_residual,
        "converged": r.converged,
        "data_term": r.data_term,
        "laplacian_energy": r.laplacian_energy,
        "fit_seconds": r.fit_seconds,
    })
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn run(command: Command) -> bistyle::Result<Value> {
    match command {
        Command::Stylize {
            content,
            style,
            out,
            lowres,
            dims,
            lambda_r,
            clamp,
            features_content,
            features_style,
            save_grid,
            bit_depth,
        } => {
            let content_img = read_png(&content)?;
            let style_img = read_png(&style)?;
            let features = match (features_content, features_style) {
                (Some(c), Some(s)) => Some((fmap::read(c)?, fmap::read(s)?)),
                _ => None,
            };
            let cfg = StylizeConfig {
                lowres,
                lambda_r,
                clamp_output: clamp,
                features,
                ..StylizeConfig::default()
            }
            .with_grid_dims(dims.gw, dims.gh, dims.gd);
            let result = stylize(&content_img, &style_img, &cfg)?;
            write_png(&out, &result.image, clamp, bit_depth.into())?;
            if let Some(g) = &save_grid {
                result.grid_file(&cfg.curve).write(g)?;
            }
            Ok(json!({
                "command": "stylize",
                "out": path_str(&out),
                "width": result.image.width(),
                "height": result.image.height(),
                "grid": [dims.gw, dims.gh, dims.gd],
                "saved_grid": save_grid.as_deref().map(path_str),
                "fit": fit_json(&result.fit),
            }))
        }
        Command::Fit {
            input,
            output,
            grid,
            dims,
            lambda_r,
            max_iters,
            tol,
        } => {
            let problem = FitProblem::new(read_png(&input)?, read_png(&output)?)
                .with_grid_dims(dims.gw, dims.gh, dims.gd)
                .with_lambda_r(lambda_r)
                .with_max_iters(max_iters)
                .with_tol(tol);
            let (fitted, report) = fit_grid(&problem)?;
            GridFile::new(fitted, problem.curve.clone()).write(&grid)?;
            Ok(json!({
                "command": "fit",
                "grid": path_str(&grid),
                "dims": [dims.gw, dims.gh, dims.gd],
                "fit": fit_json(&report),
            }))
        }
        Command::Apply {
            grid,
            input,
            out,
            clamp,
            bit_depth,
        } => {
            let file = GridFile::read(&grid)?;
            let img = read_png(&input)?;
            let rendered = apply_grid_file(&file, &img, clamp);
            write_png(&out, &rendered, clamp, bit_depth.into())?;
            Ok(json!({
                "command": "apply",
                "out": path_str(&out),
                "width": rendered.width(),
                "height": rendered.height(),
            }))
        }
        Command::Bench {
            width,
            height,
            dims,
            iters,
            sequential,
        } => {
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let report = run_render_bench(&RenderBenchConfig {
                width,
                height,
                gw: dims.gw,
                gh: dims.gh,
                gd: dims.gd,
                iters,
                warmup: 1,
                exec,
            })?;
            Ok(json!({
                "command": "bench",
                "width": width,
                "height": height,
                "grid": [dims.gw, dims.gh, dims.gd],
                "iters": iters,
                "parallel": matches!(exec, Execution::Parallel) && Execution::parallel_available(),
                "megapixels": report.megapixels(),
                "median_ms": report.ms_per_frame(),
                "min_ms": report.min_seconds * 1e3,
                "mpix_per_s": report.mpix_per_second(),
            }))
        }
        Command::Gradcheck { seed } => {
            let r = gradcheck(seed);
            Ok(json!({
                "command": "gradcheck",
                "seed": seed,
                "coefficients": r.coefficients_checked,
                "slice_max_rel_err": r.slice_max_rel_err,
                "laplacian_max_rel_err": r.laplacian_max_rel_err,
                "passed": r.passed(1e-3),
            }))
        }
        Command::Frames {
            grid,
            style,
            per_frame,
            in_dir,
            out_dir,
            clamp,
        } => {
            let frames = frame_paths(&in_dir)?;
            if frames.is_empty() {
                return Err(Error::InvalidParameter(format!("no PNG frames in {}", in_dir.display())));
            }
            std::fs::create_dir_all(&out_dir)?;
            let cfg = StylizeConfig::default();
            let style_img = style.as_ref().map(read_png).transpose()?;
            let mut fixed = grid.as_ref().map(GridFile::read).transpose()?;
            let mut fits = 0usize;
            for path in &frames {
                let img = read_png(path)?;
                let file = match (&fixed, &style_img) {
                    (Some(f), _) if !per_frame => f.clone(),
                    (_, Some(s)) => {
                        let g = stylize(&img, s, &cfg)?.grid;
                        fits += 1;
                        let f = GridFile::new(g, cfg.curve.clone());
                        if !per_frame {
                            fixed = Some(f.clone());
                        }
                        f
                    }
                    _ => unreachable!("clap requires --grid or --style"),
                };
                let rendered = apply_grid_file(&file, &img, clamp);
                let name = path.file_name().expect("listed files have names");
                write_png(out_dir.join(name), &rendered, clamp, BitDepth::Eight)?;
            }
            Ok(json!({
                "command": "frames",
                "frames": frames.len(),
                "fits": fits,
                "out_dir": path_str(&out_dir),
            }))
        }
    }
}

fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::Parse { offset, .. } = e {
        v["offset"] = json!(offset);
    }
    v
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": "usage", "message": first }));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
