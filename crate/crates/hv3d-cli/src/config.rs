//! Shared flags, optional JSON config file, and their merge into one
//! resolved, report-embeddable configuration. Precedence: command-line
//! flags, then config-file values, then built-in defaults.

use anyhow::{anyhow, Context};
use clap::Args;
use hv3d::metric::{fovea_block_size, DisplayGeometry, MetricParams};
use hv3d::pooling::{PoolingParams, RecencySign, WeightMode};
use hv3d::quality2d::VIF_VARIANT;
use hv3d::video_io::{ManifestEntry, ViewPaths};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Options accepted by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct CommonOpts {
    /// JSON config file; flags given on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Frame width in pixels (required for raw YUV inputs).
    #[arg(long)]
    pub width: Option<usize>,
    /// Frame height in pixels (required for raw YUV inputs).
    #[arg(long)]
    pub height: Option<usize>,
    /// Frame rate used for bookkeeping (default 25).
    #[arg(long)]
    pub fps: Option<f64>,

    /// Matching/fusion block side m.
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Full-search window side M (candidates span +/- M/2 around the seed).
    #[arg(long)]
    pub search_range: Option<usize>,
    /// Depth-variance window side k; derived from the display geometry when
    /// not given.
    #[arg(long)]
    pub fovea_k: Option<usize>,

    /// Exponent on the cyclopean term.
    #[arg(long)]
    pub beta1: Option<f64>,
    /// Exponent on the disparity-fidelity term.
    #[arg(long)]
    pub beta2: Option<f64>,
    /// Exponent on the depth-variance term.
    #[arg(long)]
    pub beta3: Option<f64>,

    /// Minkowski pooling exponent p.
    #[arg(long)]
    pub p: Option<f64>,
    /// Recency decay constant tau, in frames.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Whether recency weights are rescaled to mean 1 before pooling.
    #[arg(long, value_enum)]
    pub pooling_mode: Option<PoolingModeArg>,
    /// Direction of the recency weighting.
    #[arg(long, value_enum)]
    pub recency_sign: Option<RecencySignArg>,

    /// Trust disparity seeds directly instead of refining with a search.
    #[arg(long)]
    pub fast: bool,
    /// +1 when positive disparity shifts a left-view block towards smaller x
    /// in the right view; -1 for the opposite convention.
    #[arg(long, allow_hyphen_values = true)]
    pub disparity_sign: Option<i32>,
    /// Keep the left view as base on every frame instead of alternating.
    #[arg(long)]
    pub no_alternate: bool,

    /// Worker threads (default: HV3D_THREADS, then all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for all randomized operations.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cap on the number of frames read per input file.
    #[arg(long)]
    pub max_frames: Option<usize>,

    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum PoolingModeArg {
    Normalized,
    Literal,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum RecencySignArg {
    TowardLast,
    AsPrinted,
}

impl From<PoolingModeArg> for WeightMode {
    fn from(v: PoolingModeArg) -> Self {
        match v {
            PoolingModeArg::Normalized => WeightMode::Normalized,
            PoolingModeArg::Literal => WeightMode::Literal,
        }
    }
}

impl From<RecencySignArg> for RecencySign {
    fn from(v: RecencySignArg) -> Self {
        match v {
            RecencySignArg::TowardLast => RecencySign::TowardLast,
            RecencySignArg::AsPrinted => RecencySign::AsPrinted,
        }
    }
}

/// Optional JSON config file; every field mirrors a flag.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fps: Option<f64>,
    pub block_size: Option<usize>,
    pub search_range: Option<usize>,
    pub fovea_k: Option<usize>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub beta3: Option<f64>,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub pooling_mode: Option<WeightMode>,
    pub recency_sign: Option<RecencySign>,
    pub fast: Option<bool>,
    pub disparity_sign: Option<i32>,
    pub alternate_views: Option<bool>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub max_frames: Option<usize>,
    pub geometry: Option<DisplayGeometry>,
}

/// Fully resolved settings, embedded verbatim in every report so results
/// are self-describing.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub metric: MetricParams,
    pub geometry: DisplayGeometry,
    pub pooling: PoolingParams,
    pub fps: f64,
    pub seed: u64,
    pub max_frames: Option<usize>,
    pub threads: usize,
    pub vif_variant: &'static str,
    #[serde(skip)]
    pub width: Option<usize>,
    #[serde(skip)]
    pub height: Option<usize>,
    #[serde(skip)]
    thread_request: Option<usize>,
}

impl ResolvedConfig {
    /// Width/height from flags or config, erroring with the flag names when
    /// missing (raw YUV carries no header to read them from).
    pub fn required_dims(&self) -> anyhow::Result<(usize, usize)> {
        match (self.width, self.height) {
            (Some(w), Some(h)) => Ok((w, h)),
            _ => Err(anyhow!(
                "frame dimensions are required for raw YUV input; pass --width and --height (or set them in the config file)"
            )),
        }
    }

    /// Builds the worker pool this command should run under.
    pub fn build_pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.thread_request {
            builder = builder.num_threads(n);
        }
        builder.build().context("building the thread pool")
    }
}

fn env_threads() -> Option<usize> {
    std::env::var("HV3D_THREADS").ok()?.trim().parse().ok()
}

/// Merges flags over the config file over defaults and validates the result.
pub fn resolve(common: &CommonOpts) -> anyhow::Result<ResolvedConfig> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config file {}", path.display()))?
        }
        None => FileConfig::default(),
    };

    let defaults = MetricParams::default();
    let geometry = file.geometry.unwrap_or_default();
    let block_size = common
        .block_size
        .or(file.block_size)
        .unwrap_or(defaults.block_size);
    let fovea_k = match common.fovea_k.or(file.fovea_k) {
        Some(k) => k,
        None => fovea_block_size(&geometry, block_size)?,
    };
    let metric = MetricParams {
        beta1: common.beta1.or(file.beta1).unwrap_or(defaults.beta1),
        beta2: common.beta2.or(file.beta2).unwrap_or(defaults.beta2),
        beta3: common.beta3.or(file.beta3).unwrap_or(defaults.beta3),
        block_size,
        search_range: common
            .search_range
            .or(file.search_range)
            .unwrap_or(defaults.search_range),
        fovea_k,
        fast_mode: common.fast || file.fast.unwrap_or(false),
        disparity_sign: common
            .disparity_sign
            .or(file.disparity_sign)
            .unwrap_or(defaults.disparity_sign),
        alternate_views: if common.no_alternate {
            false
        } else {
            file.alternate_views.unwrap_or(defaults.alternate_views)
        },
    };
    metric.validate()?;

    let pooling_defaults = PoolingParams::default();
    let pooling = PoolingParams {
        p: common.p.or(file.p).unwrap_or(pooling_defaults.p),
        tau: common.tau.or(file.tau).unwrap_or(pooling_defaults.tau),
        weight_mode: common
            .pooling_mode
            .map(WeightMode::from)
            .or(file.pooling_mode)
            .unwrap_or_default(),
        recency_sign: common
            .recency_sign
            .map(RecencySign::from)
            .or(file.recency_sign)
            .unwrap_or_default(),
    };
    pooling.validate()?;

    let thread_request = common.threads.or(file.threads).or_else(env_threads);
    let mut resolved = ResolvedConfig {
        metric,
        geometry,
        pooling,
        fps: common.fps.or(file.fps).unwrap_or(25.0),
        seed: common.seed.or(file.seed).unwrap_or(0),
        max_frames: common.max_frames.or(file.max_frames),
        threads: 0,
        vif_variant: VIF_VARIANT,
        width: common.width.or(file.width),
        height: common.height.or(file.height),
        thread_request,
    };
    // Record the worker count a pool built from this config will actually use.
    resolved.threads = resolved.build_pool()?.current_num_threads();
    Ok(resolved)
}

/// Flags naming the input files of one reference/distorted stereo pair.
#[derive(Args, Debug, Clone)]
pub struct PairPaths {
    /// Reference left-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub ref_left: PathBuf,
    /// Reference right-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub ref_right: PathBuf,
    /// Reference left-to-right disparity file (raw 8-bit or PGM).
    #[arg(long, value_name = "FILE")]
    pub ref_disp: PathBuf,
    /// Reference right-to-left disparity file.
    #[arg(long, value_name = "FILE")]
    pub ref_disp_r2l: Option<PathBuf>,
    /// Distorted left-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub dist_left: PathBuf,
    /// Distorted right-view YUV420p file.
    #[arg(long, value_name = "FILE")]
    pub dist_right: PathBuf,
    /// Distorted left-to-right disparity file.
    #[arg(long, value_name = "FILE")]
    pub dist_disp: PathBuf,
    /// Distorted right-to-left disparity file.
    #[arg(long, value_name = "FILE")]
    pub dist_disp_r2l: Option<PathBuf>,
}

impl PairPaths {
    pub fn to_entry(&self, cfg: &ResolvedConfig) -> anyhow::Result<ManifestEntry> {
        let (width, height) = cfg.required_dims()?;
        Ok(ManifestEntry {
            id: "cli".into(),
            reference: ViewPaths {
                left: self.ref_left.clone(),
                right: self.ref_right.clone(),
                disp_l2r: self.ref_disp.clone(),
                disp_r2l: self.ref_disp_r2l.clone(),
            },
            dist: ViewPaths {
                left: self.dist_left.clone(),
                right: self.dist_right.clone(),
                disp_l2r: self.dist_disp.clone(),
                disp_r2l: self.dist_disp_r2l.clone(),
            },
            distortion: "unspecified".into(),
            mos: None,
            width,
            height,
            fps: cfg.fps,
        })
    }
}

/// Comma-separated float list, e.g. "0,0.0025,0.01".
pub fn parse_float_list(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("{what}: bad value '{s}': {e}"))
        })
        .collect::<anyhow::Result<_>>()?;
    if values.is_empty() {
        return Err(anyhow!("{what}: the list is empty"));
    }
    Ok(values)
}
