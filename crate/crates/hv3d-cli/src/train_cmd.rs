//! `hv3d train`: exhaustive grid search for the combination exponents and
//! the pooling parameters on a rated manifest. Per-frame components are
//! cached to disk so parameter sweeps can be re-run without re-scoring.

use crate::config::{self, parse_float_list, CommonOpts, ResolvedConfig};
use crate::out::{write_atomic, write_json};
use crate::Outcome;
use anyhow::{anyhow, Context};
use clap::Args;
use hv3d::metric::hv3d_sequence;
use hv3d::train::{
    default_p_grid, default_tau_grid, train_exponents, train_pooling, ComponentRecord, ExponentFit,
    ExponentGrid, FrameComponents, PoolingFit,
};
use hv3d::video_io::{load_dataset_manifest, load_entry, ManifestEntry};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

/// Minimum rated entries before training is attempted.
pub const MIN_RECORDS: usize = 8;

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Dataset manifest (JSON) with rated entries.
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Grid step for each combination exponent.
    #[arg(long)]
    pub beta_step: Option<f64>,
    /// Upper bound of each exponent grid.
    #[arg(long)]
    pub beta_max: Option<f64>,
    /// Comma-separated pooling exponents to sweep (default 1..12).
    #[arg(long)]
    pub p_grid: Option<String>,
    /// Comma-separated decay constants to sweep.
    #[arg(long)]
    pub tau_grid: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ComponentRow {
    id: String,
    frame_index: usize,
    q_cyclopean_mean: f64,
    vif_depth: f64,
    variance_term: f64,
    mos: f64,
}

#[derive(Serialize, Deserialize, PartialEq)]
struct CacheMeta {
    fingerprint: String,
    record_count: usize,
}

#[derive(Serialize)]
struct TrainedReport<'a> {
    exponents: ExponentFit,
    pooling: PoolingFit,
    grids: GridsUsed,
    record_count: usize,
    fingerprint: String,
    config: &'a ResolvedConfig,
}

#[derive(Serialize)]
struct GridsUsed {
    beta: ExponentGrid,
    p: Vec<f64>,
    tau: Vec<f64>,
}

/// Identity of the cached components: the scoring settings plus everything
/// about each rated entry that feeds them. Changed inputs change the
/// fingerprint; edits to file contents alone do not (delete the cache to
/// force re-scoring after regenerating clips in place).
fn fingerprint(entries: &[&ManifestEntry], cfg: &ResolvedConfig) -> anyhow::Result<String> {
    let metric = serde_json::to_string(&cfg.metric).context("hashing metric params")?;
    let mut hasher = DefaultHasher::new();
    metric.hash(&mut hasher);
    cfg.max_frames.hash(&mut hasher);
    for e in entries {
        e.id.hash(&mut hasher);
        serde_json::to_string(&e.reference)
            .context("hashing entry paths")?
            .hash(&mut hasher);
        serde_json::to_string(&e.dist)
            .context("hashing entry paths")?
            .hash(&mut hasher);
        e.mos.map(f64::to_bits).hash(&mut hasher);
        (e.width, e.height).hash(&mut hasher);
        e.fps.to_bits().hash(&mut hasher);
    }
    Ok(format!("{:016x}", hasher.finish()))
}

fn score_records(
    entries: &[&ManifestEntry],
    cfg: &ResolvedConfig,
) -> anyhow::Result<Vec<ComponentRecord>> {
    let pool = cfg.build_pool()?;
    pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let (reference, distorted) = load_entry(entry, cfg.max_frames)
                    .with_context(|| format!("entry '{}'", entry.id))?;
                let scores = hv3d_sequence(&reference, &distorted, &cfg.metric)
                    .with_context(|| format!("entry '{}'", entry.id))?;
                Ok(ComponentRecord {
                    id: entry.id.clone(),
                    frames: scores.iter().map(FrameComponents::from).collect(),
                    mos: entry.mos.expect("caller filters to rated entries"),
                })
            })
            .collect()
    })
}

fn write_cache(dir: &Path, records: &[ComponentRecord], fingerprint: &str) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for r in records {
        for (i, f) in r.frames.iter().enumerate() {
            writer.serialize(ComponentRow {
                id: r.id.clone(),
                frame_index: i,
                q_cyclopean_mean: f.q_cyclopean_mean,
                vif_depth: f.vif_depth,
                variance_term: f.variance_term,
                mos: r.mos,
            })?;
        }
    }
    write_atomic(&dir.join("components.csv"), &writer.into_inner()?)?;
    write_json(
        &dir.join("components_meta.json"),
        &CacheMeta {
            fingerprint: fingerprint.to_string(),
            record_count: records.len(),
        },
    )
}

fn read_cache(dir: &Path, fingerprint: &str) -> Option<Vec<ComponentRecord>> {
    let meta: CacheMeta =
        serde_json::from_str(&std::fs::read_to_string(dir.join("components_meta.json")).ok()?)
            .ok()?;
    if meta.fingerprint != fingerprint {
        return None;
    }
    let mut reader = csv::Reader::from_path(dir.join("components.csv")).ok()?;
    let mut order: Vec<String> = Vec::new();
    let mut by_id: BTreeMap<String, ComponentRecord> = BTreeMap::new();
    for row in reader.deserialize::<ComponentRow>() {
        let row = row.ok()?;
        if !by_id.contains_key(&row.id) {
            order.push(row.id.clone());
            by_id.insert(
                row.id.clone(),
                ComponentRecord {
                    id: row.id.clone(),
                    frames: Vec::new(),
                    mos: row.mos,
                },
            );
        }
        by_id.get_mut(&row.id)?.frames.push(FrameComponents {
            q_cyclopean_mean: row.q_cyclopean_mean,
            vif_depth: row.vif_depth,
            variance_term: row.variance_term,
        });
    }
    if order.len() != meta.record_count {
        return None;
    }
    Some(
        order
            .into_iter()
            .filter_map(|id| by_id.remove(&id))
            .collect(),
    )
}

pub fn run(args: &TrainArgs) -> anyhow::Result<Outcome> {
    let cfg = config::resolve(&args.common)?;
    let manifest = load_dataset_manifest(&args.manifest)?;
    let rated: Vec<&ManifestEntry> = manifest
        .entries
        .iter()
        .filter(|e| e.mos.is_some())
        .collect();
    if rated.len() < MIN_RECORDS {
        return Err(anyhow!(
            "training needs at least {MIN_RECORDS} rated entries, manifest has {}",
            rated.len()
        ));
    }

    let beta_defaults = ExponentGrid::default();
    let beta_grid = ExponentGrid {
        step: args.beta_step.unwrap_or(beta_defaults.step),
        max: args.beta_max.unwrap_or(beta_defaults.max),
    };
    let p_grid = match &args.p_grid {
        Some(text) => parse_float_list(text, "--p-grid")?,
        None => default_p_grid(),
    };
    let tau_grid = match &args.tau_grid {
        Some(text) => parse_float_list(text, "--tau-grid")?,
        None => default_tau_grid(),
    };

    let fp = fingerprint(&rated, &cfg)?;
    let records = match read_cache(&args.common.out, &fp) {
        Some(records) => {
            eprintln!(
                "component cache hit ({} records, fingerprint {fp}); skipping frame scoring",
                records.len()
            );
            records
        }
        None => {
            let records = score_records(&rated, &cfg)?;
            write_cache(&args.common.out, &records, &fp)?;
            records
        }
    };

    let exponents = train_exponents(&records, &beta_grid, &cfg.pooling)?;
    eprintln!(
        "exponents: beta = ({}, {}, {}) at pcc {:.6} over {} grid points",
        exponents.beta1, exponents.beta2, exponents.beta3, exponents.pcc, exponents.evaluations
    );

    let frame_scores: Vec<Vec<f64>> = records
        .iter()
        .map(|r| {
            r.frames
                .iter()
                .map(|f| f.score(exponents.beta1, exponents.beta2, exponents.beta3))
                .collect()
        })
        .collect();
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();
    let pooling = train_pooling(&frame_scores, &mos, &p_grid, &tau_grid, &cfg.pooling)?;
    eprintln!(
        "pooling: p = {}, tau = {} at pcc {:.6} over {} grid points",
        pooling.p, pooling.tau, pooling.pcc, pooling.evaluations
    );

    let report = TrainedReport {
        exponents,
        pooling,
        grids: GridsUsed {
            beta: beta_grid,
            p: p_grid,
            tau: tau_grid,
        },
        record_count: records.len(),
        fingerprint: fp,
        config: &cfg,
    };
    write_json(&args.common.out.join("trained.json"), &report)?;
    Ok(Outcome::Clean)
}
