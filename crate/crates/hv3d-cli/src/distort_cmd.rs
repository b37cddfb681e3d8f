//! `hv3d distort`: write seeded distorted copies of a stereo clip, one
//! output set per severity level, each with a JSON sidecar that fully
//! describes what was applied.

use crate::config::{self, parse_float_list, CommonOpts};
use crate::out::write_json;
use crate::Outcome;
use anyhow::{anyhow, Context};
use clap::Args;
use hv3d::distort::{
    distort_stereo, gaussian_kernel, AppliedFrameParams, DistortionKind, DistortionSpec,
    TemporalMode,
};
use hv3d::synth::save_view_files;
use hv3d::video_io::{load_disparity_maps, load_yuv_sequence, StereoSequence, ViewPaths};
use serde::Serialize;
use std::path::PathBuf;

pub const SUPPORTED_KINDS: [&str; 3] = ["gaussian-noise", "gaussian-blur", "brightness-shift"];

/// Default blur tap count; even values are promoted to the next odd.
pub const DEFAULT_BLUR_SIZE: usize = 5;

#[derive(Args, Debug)]
pub struct DistortArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Input left-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub left: PathBuf,
    /// Input right-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub right: PathBuf,
    /// Input left-to-right disparity file (raw 8-bit or PGM).
    #[arg(long, value_name = "FILE")]
    pub disp: PathBuf,
    /// Input right-to-left disparity file.
    #[arg(long, value_name = "FILE")]
    pub disp_r2l: Option<PathBuf>,
    /// Distortion family: gaussian-noise, gaussian-blur, or brightness-shift.
    #[arg(long)]
    pub kind: String,
    /// Comma-separated severities, one output set per value (noise:
    /// variance; blur: sigma; brightness: delta).
    #[arg(long, allow_hyphen_values = true)]
    pub levels: Option<String>,
    /// Blur kernel tap count.
    #[arg(long)]
    pub size: Option<usize>,
    /// Redraw the severity per frame, uniformly from LO,HI (replaces
    /// --levels; produces a single output set).
    #[arg(long, value_name = "LO,HI", conflicts_with = "levels")]
    pub random_range: Option<String>,
}

#[derive(Serialize)]
struct Sidecar {
    spec: DistortionSpec,
    applied: Vec<AppliedFrameParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    blur_taps_used: Option<usize>,
    /// File names inside the set's directory, so the sidecar stays valid
    /// when the whole set is moved.
    paths: ViewPaths,
}

fn file_names(paths: &ViewPaths) -> ViewPaths {
    let name = |p: &PathBuf| PathBuf::from(p.file_name().expect("view files have names"));
    ViewPaths {
        left: name(&paths.left),
        right: name(&paths.right),
        disp_l2r: name(&paths.disp_l2r),
        disp_r2l: paths.disp_r2l.as_ref().map(name),
    }
}

#[derive(Serialize)]
struct DistortIndex {
    kind: String,
    seed: u64,
    sets: Vec<IndexEntry>,
}

#[derive(Serialize)]
struct IndexEntry {
    dir: String,
    spec: DistortionSpec,
}

fn kind_for(kind: &str, severity: f64, size: usize) -> anyhow::Result<DistortionKind> {
    match kind {
        "gaussian_noise" => Ok(DistortionKind::GaussianNoise { variance: severity }),
        "gaussian_blur" => Ok(DistortionKind::GaussianBlur {
            size,
            sigma: severity,
        }),
        "brightness_shift" => {
            if severity.fract() != 0.0 {
                return Err(anyhow!("brightness delta must be an integer, got {severity}"));
            }
            Ok(DistortionKind::BrightnessShift {
                delta: severity as i32,
            })
        }
        other => Err(anyhow!(
            "unsupported distortion kind '{other}'; supported kinds: {}. Codec-based degradations (e.g. hevc, jpeg) and view-synthesis pipelines are out of scope",
            SUPPORTED_KINDS.join(", ")
        )),
    }
}

pub fn run(args: &DistortArgs) -> anyhow::Result<Outcome> {
    let cfg = config::resolve(&args.common)?;
    let (width, height) = cfg.required_dims()?;
    let kind_key = args.kind.replace('-', "_");
    let size = args.size.unwrap_or(DEFAULT_BLUR_SIZE);

    // Severity plan: (label, leading severity, temporal mode) per output set.
    let plan: Vec<(String, f64, TemporalMode)> = match (&args.levels, &args.random_range) {
        (_, Some(range)) => {
            let bounds = parse_float_list(range, "--random-range")?;
            if bounds.len() != 2 || bounds[1] < bounds[0] {
                return Err(anyhow!("--random-range wants LO,HI with LO <= HI"));
            }
            vec![(
                "random".to_string(),
                bounds[0],
                TemporalMode::PerFrameRandom {
                    lo: bounds[0],
                    hi: bounds[1],
                },
            )]
        }
        (Some(levels), None) => parse_float_list(levels, "--levels")?
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("level_{i}"), v, TemporalMode::Constant))
            .collect(),
        (None, None) => return Err(anyhow!("pass --levels or --random-range")),
    };

    let left = load_yuv_sequence(&args.left, width, height, cfg.fps, cfg.max_frames)?;
    let right = load_yuv_sequence(&args.right, width, height, cfg.fps, cfg.max_frames)?;
    let n = left.len();
    let l2r = load_disparity_maps(&args.disp, width, height, 1.0, n)?;
    let r2l = args
        .disp_r2l
        .as_ref()
        .map(|p| load_disparity_maps(p, width, height, 1.0, n))
        .transpose()?;
    let input = StereoSequence::new(left, right, l2r, r2l)?;

    let mut sets = Vec::new();
    for (label, severity, temporal) in plan {
        let spec = DistortionSpec {
            kind: kind_for(&kind_key, severity, size)?,
            temporal,
            seed: cfg.seed,
        };
        let dir = args.common.out.join(&label);
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let (distorted, applied) = distort_stereo(&input, &spec)?;
        let paths = save_view_files(&distorted, &dir, "clip")?;
        let blur_taps_used = match spec.kind {
            DistortionKind::GaussianBlur { size, sigma } => {
                Some(gaussian_kernel(size, sigma).0.len())
            }
            _ => None,
        };
        write_json(
            &dir.join("sidecar.json"),
            &Sidecar {
                spec,
                applied,
                blur_taps_used,
                paths: file_names(&paths),
            },
        )?;
        eprintln!("wrote {} ({} frames)", dir.display(), n);
        sets.push(IndexEntry { dir: label, spec });
    }

    write_json(
        &args.common.out.join("index.json"),
        &DistortIndex {
            kind: kind_key,
            seed: cfg.seed,
            sets,
        },
    )?;
    Ok(Outcome::Clean)
}
