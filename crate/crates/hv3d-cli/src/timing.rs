//! `hv3d timing`: wall-clock per-frame cost of each implemented metric on
//! a manifest, reported relative to PSNR.

use crate::baselines::{entry_psnr, entry_ssim, entry_vif};
use crate::config::{self, CommonOpts, ResolvedConfig};
use crate::out::{csv_bytes, fmt, write_atomic, write_json};
use crate::Outcome;
use anyhow::{anyhow, Context};
use clap::Args;
use hv3d::metric::{hv3d_sequence, MetricParams};
use hv3d::video_io::{load_dataset_manifest, load_entry, StereoSequence};
use rayon::prelude::*;
use serde::Serialize;
use std::hint::black_box;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TimedMetric {
    Hv3d,
    FastHv3d,
    Psnr,
    Ssim,
    Vif,
}

impl TimedMetric {
    fn parse(name: &str) -> anyhow::Result<Self> {
        match name.replace('-', "_").as_str() {
            "hv3d" => Ok(TimedMetric::Hv3d),
            "fast_hv3d" => Ok(TimedMetric::FastHv3d),
            "psnr" => Ok(TimedMetric::Psnr),
            "ssim" => Ok(TimedMetric::Ssim),
            "vif" => Ok(TimedMetric::Vif),
            other => Err(anyhow!(
                "unknown metric '{other}'; choose from hv3d, fast-hv3d, psnr, ssim, vif"
            )),
        }
    }

    fn name(self) -> &'static str {
        match self {
            TimedMetric::Hv3d => "hv3d",
            TimedMetric::FastHv3d => "fast_hv3d",
            TimedMetric::Psnr => "psnr",
            TimedMetric::Ssim => "ssim",
            TimedMetric::Vif => "vif",
        }
    }

    fn mode(self) -> &'static str {
        match self {
            TimedMetric::Hv3d => "full",
            TimedMetric::FastHv3d => "fast",
            _ => "-",
        }
    }
}

#[derive(Args, Debug)]
pub struct TimingArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Dataset manifest (JSON); all entries are timed.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Comma-separated metrics to time (default: all of hv3d, fast-hv3d,
    /// psnr, ssim, vif). PSNR is always measured as the ratio base.
    #[arg(long)]
    pub metrics: Option<String>,
}

#[derive(Serialize)]
struct TimingRow {
    metric: &'static str,
    mode: &'static str,
    seconds_per_frame: f64,
    ratio_to_psnr: f64,
}

#[derive(Serialize)]
struct TimingReport<'a> {
    frame_count: usize,
    entry_count: usize,
    threads: usize,
    rows: Vec<TimingRow>,
    config: &'a ResolvedConfig,
}

fn run_metric(
    metric: TimedMetric,
    pairs: &[(StereoSequence, StereoSequence)],
    cfg: &ResolvedConfig,
    pool: &rayon::ThreadPool,
) -> anyhow::Result<f64> {
    let params_for = |fast: bool| MetricParams {
        fast_mode: fast,
        ..cfg.metric
    };
    let started = Instant::now();
    pool.install(|| -> anyhow::Result<()> {
        match metric {
            TimedMetric::Hv3d | TimedMetric::FastHv3d => {
                let params = params_for(metric == TimedMetric::FastHv3d);
                for (r, d) in pairs {
                    black_box(hv3d_sequence(r, d, &params)?);
                }
            }
            TimedMetric::Psnr => pairs.par_iter().try_for_each(|(r, d)| {
                entry_psnr(r, d).map(|v| {
                    black_box(v);
                })
            })?,
            TimedMetric::Ssim => pairs.par_iter().try_for_each(|(r, d)| {
                entry_ssim(r, d).map(|v| {
                    black_box(v);
                })
            })?,
            TimedMetric::Vif => pairs.par_iter().try_for_each(|(r, d)| {
                entry_vif(r, d).map(|v| {
                    black_box(v);
                })
            })?,
        }
        Ok(())
    })?;
    Ok(started.elapsed().as_secs_f64())
}

pub fn run(args: &TimingArgs) -> anyhow::Result<Outcome> {
    let cfg = config::resolve(&args.common)?;
    let manifest = load_dataset_manifest(&args.manifest)?;
    if manifest.entries.is_empty() {
        return Err(anyhow!(
            "manifest {} contains no entries",
            args.manifest.display()
        ));
    }

    let mut metrics: Vec<TimedMetric> = match &args.metrics {
        Some(list) => list
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| TimedMetric::parse(s.trim()))
            .collect::<anyhow::Result<_>>()?,
        None => vec![
            TimedMetric::Hv3d,
            TimedMetric::FastHv3d,
            TimedMetric::Psnr,
            TimedMetric::Ssim,
            TimedMetric::Vif,
        ],
    };
    if metrics.is_empty() {
        return Err(anyhow!("--metrics: the list is empty"));
    }
    if !metrics.contains(&TimedMetric::Psnr) {
        metrics.push(TimedMetric::Psnr);
    }

    // Load everything up front so I/O stays out of the clock.
    let pairs: Vec<(StereoSequence, StereoSequence)> = manifest
        .entries
        .iter()
        .map(|e| load_entry(e, cfg.max_frames).with_context(|| format!("entry '{}'", e.id)))
        .collect::<anyhow::Result<_>>()?;
    let frame_count: usize = pairs.iter().map(|(r, _)| r.len()).sum();

    let pool = cfg.build_pool()?;
    let mut seconds = Vec::new();
    for &metric in &metrics {
        let elapsed = run_metric(metric, &pairs, &cfg, &pool)?;
        let spf = elapsed / frame_count as f64;
        eprintln!("{}: {:.4} s/frame", metric.name(), spf);
        seconds.push(spf);
    }

    let psnr_spf = seconds[metrics
        .iter()
        .position(|&m| m == TimedMetric::Psnr)
        .unwrap()];
    let rows: Vec<TimingRow> = metrics
        .iter()
        .zip(&seconds)
        .map(|(&metric, &spf)| TimingRow {
            metric: metric.name(),
            mode: metric.mode(),
            seconds_per_frame: spf,
            ratio_to_psnr: if metric == TimedMetric::Psnr {
                1.0
            } else {
                spf / psnr_spf.max(1e-12)
            },
        })
        .collect();

    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.metric.to_string(),
                r.mode.to_string(),
                fmt(r.seconds_per_frame),
                fmt(r.ratio_to_psnr),
            ]
        })
        .collect();
    write_atomic(
        &args.common.out.join("timing.csv"),
        &csv_bytes(
            &["metric", "mode", "seconds_per_frame", "ratio_to_psnr"],
            &csv_rows,
        )?,
    )?;
    write_json(
        &args.common.out.join("timing.json"),
        &TimingReport {
            frame_count,
            entry_count: pairs.len(),
            threads: cfg.threads,
            rows,
            config: &cfg,
        },
    )?;
    Ok(Outcome::Clean)
}
