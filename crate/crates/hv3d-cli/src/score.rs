//! `hv3d score`: one reference/distorted pair in, per-frame CSV plus a
//! pooled summary out.

use crate::config::{self, CommonOpts, PairPaths, ResolvedConfig};
use crate::out::{csv_bytes, fmt, write_atomic, write_json};
use crate::Outcome;
use clap::Args;
use hv3d::metric::{hv3d_sequence, FrameScore};
use hv3d::pooling::minkowski_pool;
use hv3d::video_io::load_entry;
use serde::Serialize;
use std::time::Instant;

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    pub paths: PairPaths,
}

pub const FRAME_CSV_HEADER: [&str; 5] = [
    "frame_index",
    "q_cyclopean_mean",
    "vif_depth",
    "variance_term",
    "hv3d",
];

#[derive(Serialize)]
struct ScoreSummary<'a> {
    pooled_hv3d: f64,
    frame_count: usize,
    fast_mode: bool,
    degenerate_frames: Vec<usize>,
    alternation_fallback_frames: Vec<usize>,
    config: &'a ResolvedConfig,
}

pub fn frame_rows(scores: &[FrameScore]) -> Vec<Vec<String>> {
    scores
        .iter()
        .map(|s| {
            vec![
                s.frame_index.to_string(),
                fmt(s.q_cyclopean_mean),
                fmt(s.vif_depth),
                fmt(s.variance_term),
                fmt(s.hv3d),
            ]
        })
        .collect()
}

pub fn run(args: &ScoreArgs) -> anyhow::Result<Outcome> {
    let cfg = config::resolve(&args.common)?;
    let entry = args.paths.to_entry(&cfg)?;
    let (reference, distorted) = load_entry(&entry, cfg.max_frames)?;

    let pool = cfg.build_pool()?;
    let started = Instant::now();
    let scores = pool.install(|| hv3d_sequence(&reference, &distorted, &cfg.metric))?;
    let elapsed = started.elapsed().as_secs_f64();
    eprintln!(
        "scored {} frames in {:.3} s ({:.1} ms/frame, {} threads, {} search)",
        scores.len(),
        elapsed,
        1e3 * elapsed / scores.len() as f64,
        cfg.threads,
        if cfg.metric.fast_mode { "fast" } else { "full" },
    );

    let hv: Vec<f64> = scores.iter().map(|s| s.hv3d).collect();
    let pooled = minkowski_pool(&hv, &cfg.pooling)?;

    let summary = ScoreSummary {
        pooled_hv3d: pooled,
        frame_count: scores.len(),
        fast_mode: cfg.metric.fast_mode,
        degenerate_frames: scores
            .iter()
            .filter(|s| s.flags.any_degenerate())
            .map(|s| s.frame_index)
            .collect(),
        alternation_fallback_frames: scores
            .iter()
            .filter(|s| s.flags.alternation_fallback)
            .map(|s| s.frame_index)
            .collect(),
        config: &cfg,
    };

    write_atomic(
        &args.common.out.join("frames.csv"),
        &csv_bytes(&FRAME_CSV_HEADER, &frame_rows(&scores))?,
    )?;
    write_json(&args.common.out.join("summary.json"), &summary)?;

    Ok(if summary.degenerate_frames.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Degenerate
    })
}
