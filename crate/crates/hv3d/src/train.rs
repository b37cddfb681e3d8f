//! Parameter training: exhaustive grid searches that pick the exponent
//! triple and the pooling pair maximizing Pearson correlation between
//! pooled scores and subjective ratings.
//!
//! Per-frame components are computed once; every grid point only
//! recombines and pools them, so the search stays cheap and parallel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::metric::FrameScore;
use crate::pooling::{minkowski_pool, PoolingParams};
use crate::stats::pearson;
use crate::{Error, Result};

/// The three per-frame component values a grid point recombines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameComponents {
    pub q_cyclopean_mean: f64,
    pub vif_depth: f64,
    pub variance_term: f64,
}

impl From<&FrameScore> for FrameComponents {
    fn from(s: &FrameScore) -> Self {
        FrameComponents {
            q_cyclopean_mean: s.q_cyclopean_mean,
            vif_depth: s.vif_depth,
            variance_term: s.variance_term,
        }
    }
}

impl FrameComponents {
    /// Combined per-frame score q^b1 * vif^b2 * var^b3, with negative
    /// cyclopean means floored at zero.
    pub fn score(&self, beta1: f64, beta2: f64, beta3: f64) -> f64 {
        self.combine(None, &[beta1, beta2, beta3])
    }

    /// q^b1 * vif^b2 * var^b3 evaluated in log space when all bases are
    /// positive (one exp instead of three powers); zero bases fall back to
    /// the direct evaluation.
    fn combine(&self, logs: Option<&[f64; 3]>, beta: &[f64; 3]) -> f64 {
        match logs {
            Some(l) => (beta[0] * l[0] + beta[1] * l[1] + beta[2] * l[2]).exp(),
            None => {
                self.q_cyclopean_mean.max(0.0).powf(beta[0])
                    * self.vif_depth.powf(beta[1])
                    * self.variance_term.powf(beta[2])
            }
        }
    }

    fn logs(&self) -> Option<[f64; 3]> {
        if self.q_cyclopean_mean > 0.0 && self.vif_depth > 0.0 && self.variance_term > 0.0 {
            Some([
                self.q_cyclopean_mean.ln(),
                self.vif_depth.ln(),
                self.variance_term.ln(),
            ])
        } else {
            None
        }
    }
}

/// One training sequence: per-frame components plus the rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRecord {
    pub id: String,
    pub frames: Vec<FrameComponents>,
    pub mos: f64,
}

/// Uniform grid over [0, max] with the given step, for each exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentGrid {
    pub step: f64,
    pub max: f64,
}

impl Default for ExponentGrid {
    fn default() -> Self {
        ExponentGrid {
            step: 0.01,
            max: 1.0,
        }
    }
}

impl ExponentGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let ok = self.step > 0.0 && self.max > 0.0 && self.step <= self.max;
        if !ok {
            return Err(Error::invalid(format!(
                "exponent grid needs 0 < step <= max, got step {} max {}",
                self.step, self.max
            )));
        }
        let n = (self.max / self.step).round() as usize;
        Ok((0..=n).map(|i| i as f64 * self.step).collect())
    }
}

/// Result of the exponent search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    pub pcc: f64,
    pub evaluations: usize,
}

/// Result of the pooling-parameter search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingFit {
    pub p: f64,
    pub tau: f64,
    pub pcc: f64,
    pub evaluations: usize,
}

/// Default pooling-exponent grid: integers 1 through 12.
pub fn default_p_grid() -> Vec<f64> {
    (1..=12).map(f64::from).collect()
}

/// Default decay-constant grid.
pub fn default_tau_grid() -> Vec<f64> {
    vec![10.0, 25.0, 50.0, 100.0, 200.0, 400.0]
}

fn validate_records(len: usize, mos: &[f64]) -> Result<()> {
    if len < 8 {
        return Err(Error::invalid(format!(
            "training needs at least 8 records, got {len}"
        )));
    }
    if mos.windows(2).all(|w| w[0] == w[1]) {
        return Err(Error::degenerate(
            "training ratings are all identical; correlation is undefined",
        ));
    }
    Ok(())
}

/// Deterministic argmax reduction: higher correlation wins, equal
/// correlations go to the smaller flattened index, so results do not depend
/// on how the parallel iterator splits the grid.
fn pick_best(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => {
            if a.1 <= b.1 {
                a
            } else {
                b
            }
        }
    }
}

/// Exhaustive search over the exponent cube maximizing the Pearson
/// correlation of pooled recombined scores against ratings. Ties break
/// towards the lexicographically smallest (beta1, beta2, beta3).
pub fn train_exponents(
    records: &[ComponentRecord],
    grid: &ExponentGrid,
    pooling: &PoolingParams,
) -> Result<ExponentFit> {
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();
    validate_records(records.len(), &mos)?;
    pooling.validate()?;
    for r in records {
        if r.frames.is_empty() {
            return Err(Error::invalid(format!("record '{}' has no frames", r.id)));
        }
    }
    let values = grid.values()?;
    let n = values.len();
    let logs: Vec<Vec<Option<[f64; 3]>>> = records
        .iter()
        .map(|r| r.frames.iter().map(FrameComponents::logs).collect())
        .collect();

    let evaluations = n * n * n;
    let (best_pcc, best_idx) = (0..evaluations)
        .into_par_iter()
        .map(|idx| {
            let beta = [
                values[idx / (n * n)],
                values[(idx / n) % n],
                values[idx % n],
            ];
            let mut pooled = Vec::with_capacity(records.len());
            for (r, rlogs) in records.iter().zip(&logs) {
                let scores: Vec<f64> = r
                    .frames
                    .iter()
                    .zip(rlogs)
                    .map(|(f, l)| f.combine(l.as_ref(), &beta))
                    .collect();
                match minkowski_pool(&scores, pooling) {
                    Ok(v) => pooled.push(v),
                    Err(_) => return (f64::NEG_INFINITY, idx),
                }
            }
            let pcc = pearson(&pooled, &mos).unwrap_or(f64::NEG_INFINITY);
            (pcc, idx)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_best);

    if best_pcc == f64::NEG_INFINITY {
        return Err(Error::degenerate(
            "no exponent combination produced a defined correlation",
        ));
    }
    Ok(ExponentFit {
        beta1: values[best_idx / (n * n)],
        beta2: values[(best_idx / n) % n],
        beta3: values[best_idx % n],
        pcc: best_pcc,
        evaluations,
    })
}

/// Grid search over (p, tau) maximizing the Pearson correlation of pooled
/// per-frame scores against ratings. Ties break towards the smaller (p,
/// tau) pair in grid order.
pub fn train_pooling(
    frame_scores: &[Vec<f64>],
    mos: &[f64],
    p_grid: &[f64],
    tau_grid: &[f64],
    base: &PoolingParams,
) -> Result<PoolingFit> {
    if frame_scores.len() != mos.len() {
        return Err(Error::dimension(format!(
            "{} score sets for {} ratings",
            frame_scores.len(),
            mos.len()
        )));
    }
    validate_records(frame_scores.len(), mos)?;
    if p_grid.is_empty() || tau_grid.is_empty() {
        return Err(Error::invalid("pooling grids must be non-empty"));
    }
    if let Some(empty) = frame_scores.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!("record {empty} has no frames")));
    }

    let evaluations = p_grid.len() * tau_grid.len();
    let (best_pcc, best_idx) = (0..evaluations)
        .into_par_iter()
        .map(|idx| {
            let params = PoolingParams {
                p: p_grid[idx / tau_grid.len()],
                tau: tau_grid[idx % tau_grid.len()],
                ..*base
            };
            let mut pooled = Vec::with_capacity(frame_scores.len());
            for scores in frame_scores {
                match minkowski_pool(scores, &params) {
                    Ok(v) => pooled.push(v),
                    Err(_) => return (f64::NEG_INFINITY, idx),
                }
            }
            let pcc = pearson(&pooled, mos).unwrap_or(f64::NEG_INFINITY);
            (pcc, idx)
        })
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), pick_best);

    if best_pcc == f64::NEG_INFINITY {
        return Err(Error::degenerate(
            "no pooling combination produced a defined correlation",
        ));
    }
    Ok(PoolingFit {
        p: p_grid[best_idx / tau_grid.len()],
        tau: tau_grid[best_idx % tau_grid.len()],
        pcc: best_pcc,
        evaluations,
    })
}
