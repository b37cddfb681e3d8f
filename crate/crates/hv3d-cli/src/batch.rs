//! `hv3d batch`: score every manifest entry, optionally run the 2-D
//! baselines, and evaluate agreement with the ratings overall and per
//! distortion family.

use crate::baselines::entry_baselines;
use crate::config::{self, CommonOpts, ResolvedConfig};
use crate::out::{csv_bytes, fmt, write_atomic, write_json};
use crate::Outcome;
use anyhow::{anyhow, Context};
use clap::Args;
use hv3d::metric::hv3d_sequence;
use hv3d::pooling::minkowski_pool;
use hv3d::stats::{agreement_for_records, Agreement, EvalRecord, OUTLIER_RULE};
use hv3d::video_io::{load_dataset_manifest, load_entry, ManifestEntry};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Rated entries needed before any statistics block is emitted.
pub const MIN_RATED: usize = 3;

/// Samples written per fitted curve in curve.csv.
const CURVE_SAMPLES: usize = 101;

#[derive(Args, Debug)]
pub struct BatchArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Dataset manifest (JSON); file paths inside are relative to it.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Also score the 2-D baselines (psnr, ssim, vif) on both views.
    #[arg(long)]
    pub baselines: bool,
}

#[derive(Serialize, Clone)]
struct EntryRow {
    id: String,
    distortion: String,
    frames: usize,
    hv3d: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    psnr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ssim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    vif: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mos: Option<f64>,
    degenerate: bool,
}

#[derive(Serialize)]
struct BatchReport<'a> {
    entry_count: usize,
    entries: Vec<EntryRow>,
    /// Agreement with ratings per metric, over all rated entries.
    metrics: BTreeMap<String, Agreement>,
    /// The same breakdown restricted to each distortion family.
    per_distortion: BTreeMap<String, BTreeMap<String, Agreement>>,
    notices: Vec<String>,
    degenerate_entries: Vec<String>,
    outlier_rule: &'static str,
    config: &'a ResolvedConfig,
}

fn score_entry(
    entry: &ManifestEntry,
    cfg: &ResolvedConfig,
    baselines: bool,
) -> anyhow::Result<EntryRow> {
    let (reference, distorted) =
        load_entry(entry, cfg.max_frames).with_context(|| format!("entry '{}'", entry.id))?;
    let scores = hv3d_sequence(&reference, &distorted, &cfg.metric)
        .with_context(|| format!("entry '{}'", entry.id))?;
    let hv: Vec<f64> = scores.iter().map(|s| s.hv3d).collect();
    let pooled = minkowski_pool(&hv, &cfg.pooling)?;
    let base = if baselines {
        Some(entry_baselines(&reference, &distorted)?)
    } else {
        None
    };
    Ok(EntryRow {
        id: entry.id.clone(),
        distortion: entry.distortion.clone(),
        frames: scores.len(),
        hv3d: pooled,
        psnr: base.map(|b| b.psnr),
        ssim: base.map(|b| b.ssim),
        vif: base.map(|b| b.vif),
        mos: entry.mos,
        degenerate: scores.iter().any(|s| s.flags.any_degenerate()),
    })
}

/// Metric name plus the value each rated row contributes.
type MetricColumn = (&'static str, fn(&EntryRow) -> Option<f64>);

fn metric_columns(baselines: bool) -> Vec<MetricColumn> {
    let mut cols: Vec<MetricColumn> = vec![("hv3d", |r| Some(r.hv3d))];
    if baselines {
        cols.push(("psnr", |r| r.psnr));
        cols.push(("ssim", |r| r.ssim));
        cols.push(("vif", |r| r.vif));
    }
    cols
}

fn agreement_over(
    rows: &[&EntryRow],
    value: fn(&EntryRow) -> Option<f64>,
) -> anyhow::Result<Agreement> {
    let records: Vec<EvalRecord> = rows
        .iter()
        .map(|r| {
            Ok(EvalRecord {
                id: r.id.clone(),
                distortion: r.distortion.clone(),
                metric_score: value(r).ok_or_else(|| anyhow!("missing metric value"))?,
                mos: r.mos.expect("caller filters to rated rows"),
            })
        })
        .collect::<anyhow::Result<_>>()?;
    Ok(agreement_for_records(&records)?)
}

fn curve_rows(metrics: &BTreeMap<String, Agreement>, rows: &[&EntryRow]) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (name, agreement) in metrics {
        let Some(curve) = agreement.curve else {
            continue;
        };
        let scores: Vec<f64> = match name.as_str() {
            "hv3d" => rows.iter().map(|r| r.hv3d).collect(),
            "psnr" => rows.iter().filter_map(|r| r.psnr).collect(),
            "ssim" => rows.iter().filter_map(|r| r.ssim).collect(),
            "vif" => rows.iter().filter_map(|r| r.vif).collect(),
            _ => continue,
        };
        let (lo, hi) = scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| {
                (lo.min(s), hi.max(s))
            });
        for i in 0..CURVE_SAMPLES {
            let x = lo + (hi - lo) * i as f64 / (CURVE_SAMPLES - 1) as f64;
            out.push(vec![name.clone(), fmt(x), fmt(curve.evaluate(x))]);
        }
    }
    out
}

pub fn run(args: &BatchArgs) -> anyhow::Result<Outcome> {
    let cfg = config::resolve(&args.common)?;
    let manifest = load_dataset_manifest(&args.manifest)?;
    if manifest.entries.is_empty() {
        return Err(anyhow!(
            "manifest {} contains no entries",
            args.manifest.display()
        ));
    }

    let pool = cfg.build_pool()?;
    let rows: Vec<EntryRow> = pool.install(|| {
        manifest
            .entries
            .par_iter()
            .map(|entry| score_entry(entry, &cfg, args.baselines))
            .collect::<anyhow::Result<_>>()
    })?;

    let mut notices = Vec::new();
    let rated: Vec<&EntryRow> = rows.iter().filter(|r| r.mos.is_some()).collect();
    let mut metrics = BTreeMap::new();
    let mut per_distortion = BTreeMap::new();
    if rated.len() < MIN_RATED {
        notices.push(format!(
            "statistics skipped: {} of {} entries carry ratings (need {MIN_RATED})",
            rated.len(),
            rows.len()
        ));
    } else {
        for (name, value) in metric_columns(args.baselines) {
            metrics.insert(name.to_string(), agreement_over(&rated, value)?);
        }
        let mut groups: BTreeMap<&str, Vec<&EntryRow>> = BTreeMap::new();
        for row in &rated {
            groups.entry(&row.distortion).or_default().push(row);
        }
        for (distortion, group) in groups {
            if group.len() < MIN_RATED {
                notices.push(format!(
                    "distortion '{distortion}': {} rated entries (need {MIN_RATED}); statistics skipped",
                    group.len()
                ));
                continue;
            }
            let mut block = BTreeMap::new();
            for (name, value) in metric_columns(args.baselines) {
                block.insert(name.to_string(), agreement_over(&group, value)?);
            }
            per_distortion.insert(distortion.to_string(), block);
        }
    }

    let mut header = vec!["id", "distortion", "frames", "hv3d"];
    if args.baselines {
        header.extend(["psnr", "ssim", "vif"]);
    }
    header.push("mos");
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![
                r.id.clone(),
                r.distortion.clone(),
                r.frames.to_string(),
                fmt(r.hv3d),
            ];
            if args.baselines {
                for v in [r.psnr, r.ssim, r.vif] {
                    row.push(v.map(fmt).unwrap_or_default());
                }
            }
            row.push(r.mos.map(fmt).unwrap_or_default());
            row
        })
        .collect();
    write_atomic(
        &args.common.out.join("scores.csv"),
        &csv_bytes(&header, &csv_rows)?,
    )?;

    let curves = curve_rows(&metrics, &rated);
    if !curves.is_empty() {
        write_atomic(
            &args.common.out.join("curve.csv"),
            &csv_bytes(&["metric", "score", "mapped"], &curves)?,
        )?;
    }

    let report = BatchReport {
        entry_count: rows.len(),
        degenerate_entries: rows
            .iter()
            .filter(|r| r.degenerate)
            .map(|r| r.id.clone())
            .collect(),
        entries: rows,
        metrics,
        per_distortion,
        notices,
        outlier_rule: OUTLIER_RULE,
        config: &cfg,
    };
    write_json(&args.common.out.join("report.json"), &report)?;

    Ok(if report.degenerate_entries.is_empty() {
        Outcome::Clean
    } else {
        Outcome::Degenerate
    })
}
