//! Disparity-seeded block correspondence search between the two views.
//!
//! Each block of the base view is seeded at the position its median
//! disparity predicts in the other view, then refined (unless running in
//! fast mode) by an exhaustive minimum-MSE search over a window around the
//! seed. The search runs on reference frames only; the coordinates it
//! returns are reused verbatim for the distorted pair.

use rayon::prelude::*;

use crate::video_io::{DisparityMap, Frame};
use crate::{Error, Result};

/// Regular grid of complete, non-overlapping `m`x`m` blocks anchored at the
/// top-left corner; partial blocks at the right/bottom edges are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    cols: usize,
    rows: usize,
    block: usize,
}

impl BlockGrid {
    pub fn new(width: usize, height: usize, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("block side must be >= 2, got {m}")));
        }
        if width < m || height < m {
            return Err(Error::dimension(format!(
                "frame {width}x{height} is smaller than one {m}x{m} block"
            )));
        }
        Ok(BlockGrid {
            cols: width / m,
            rows: height / m,
            block: m,
        })
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// Number of blocks in the grid.
    pub fn len(&self) -> usize {
        self.cols * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Block origins (x, y) in row-major order.
    pub fn origins(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (cols, m) = (self.cols, self.block);
        (0..self.len()).map(move |i| ((i % cols) * m, (i / cols) * m))
    }
}

/// Search configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    /// Block side `m`.
    pub block_size: usize,
    /// Full side `M` of the search window; candidates span +/- `M/2` around
    /// the seed in both axes.
    pub search_range: usize,
    /// +1 when positive disparity shifts the match towards smaller x in the
    /// other view, -1 for the opposite convention.
    pub disparity_sign: i32,
    /// Skip the refinement search and trust the seed position.
    pub fast: bool,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            block_size: 16,
            search_range: 64,
            disparity_sign: 1,
            fast: false,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(Error::invalid(format!(
                "block side must be >= 2, got {}",
                self.block_size
            )));
        }
        if self.search_range == 0 {
            return Err(Error::invalid("search range must be positive"));
        }
        if self.disparity_sign != 1 && self.disparity_sign != -1 {
            return Err(Error::invalid(format!(
                "disparity sign must be +1 or -1, got {}",
                self.disparity_sign
            )));
        }
        Ok(())
    }
}

/// One base-view block paired with its position in the other view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockMatch {
    /// Top-left corner of the block in the base view (x, y).
    pub base_origin: (usize, usize),
    /// Top-left corner of the matched block in the other view (x, y).
    pub match_origin: (usize, usize),
    /// Median block disparity (pixels) that seeded the search.
    pub seed_disparity: f64,
    /// MSE at the match in squared 8-bit units; `None` in fast mode where
    /// the search is skipped.
    pub mse_at_match: Option<f64>,
}

/// Median disparity (pixels) over the block at `origin`; for even sample
/// counts the lower-middle order statistic is taken.
pub fn block_disparity(map: &DisparityMap, origin: (usize, usize), m: usize) -> Result<f64> {
    let (x0, y0) = origin;
    if x0 + m > map.width() || y0 + m > map.height() {
        return Err(Error::dimension(format!(
            "{m}x{m} block at ({x0}, {y0}) exceeds the {}x{} disparity map",
            map.width(),
            map.height()
        )));
    }
    let mut stored = Vec::with_capacity(m * m);
    for y in y0..y0 + m {
        for x in x0..x0 + m {
            stored.push(map.stored_at(x, y));
        }
    }
    stored.sort_unstable();
    Ok(stored[(stored.len() - 1) / 2] as f64 * map.scale())
}

/// Position the disparity predicts for `origin` in the other view, clamped
/// so that an `m`x`m` block stays inside a `width`x`height` frame.
pub fn seed_position(
    origin: (usize, usize),
    disparity_px: f64,
    sign: i32,
    width: usize,
    height: usize,
    m: usize,
) -> (usize, usize) {
    let shift = (sign as f64 * disparity_px).round() as i64;
    let x = (origin.0 as i64 - shift).clamp(0, (width - m) as i64) as usize;
    let y = (origin.1 as i64).clamp(0, (height - m) as i64) as usize;
    (x, y)
}

fn block_sse(base: &Frame, other: &Frame, bo: (usize, usize), co: (usize, usize), m: usize) -> u64 {
    let mut sse = 0u64;
    for row in 0..m {
        let b = &base.row(bo.1 + row)[bo.0..bo.0 + m];
        let o = &other.row(co.1 + row)[co.0..co.0 + m];
        for (&x, &y) in b.iter().zip(o) {
            let d = x as i64 - y as i64;
            sse += (d * d) as u64;
        }
    }
    sse
}

/// Exhaustive minimum-MSE search over the window around `seed`.
///
/// Ties go to the candidate closest to the seed (Euclidean), then to the
/// earliest in row-major order.
pub fn find_best_match(
    base: &Frame,
    other: &Frame,
    base_origin: (usize, usize),
    seed: (usize, usize),
    seed_disparity: f64,
    params: &MatchParams,
) -> BlockMatch {
    let m = params.block_size;
    let half = (params.search_range / 2) as i64;
    let x_lo = (seed.0 as i64 - half).max(0) as usize;
    let x_hi = (seed.0 as i64 + half).min((other.width() - m) as i64) as usize;
    let y_lo = (seed.1 as i64 - half).max(0) as usize;
    let y_hi = (seed.1 as i64 + half).min((other.height() - m) as i64) as usize;

    let mut best: Option<(u64, u64, (usize, usize))> = None;
    for cy in y_lo..=y_hi {
        for cx in x_lo..=x_hi {
            let sse = block_sse(base, other, base_origin, (cx, cy), m);
            let dx = cx as i64 - seed.0 as i64;
            let dy = cy as i64 - seed.1 as i64;
            let dist2 = (dx * dx + dy * dy) as u64;
            let better = match &best {
                None => true,
                Some((bs, bd, _)) => sse < *bs || (sse == *bs && dist2 < *bd),
            };
            if better {
                best = Some((sse, dist2, (cx, cy)));
            }
        }
    }
    let (sse, _, match_origin) = best.expect("search window contains at least the seed");
    BlockMatch {
        base_origin,
        match_origin,
        seed_disparity,
        mse_at_match: Some(sse as f64 / (m * m) as f64),
    }
}

/// Fast-mode match: the seed position is used directly, no search and no
/// MSE evaluation.
pub fn fast_match(
    base_origin: (usize, usize),
    seed: (usize, usize),
    seed_disparity: f64,
) -> BlockMatch {
    BlockMatch {
        base_origin,
        match_origin: seed,
        seed_disparity,
        mse_at_match: None,
    }
}

/// Matches every grid block of `base` against `other`, seeded by `map`.
pub fn match_frame(
    base: &Frame,
    other: &Frame,
    map: &DisparityMap,
    params: &MatchParams,
) -> Result<Vec<BlockMatch>> {
    params.validate()?;
    if base.width() != other.width() || base.height() != other.height() {
        return Err(Error::dimension(format!(
            "view dimensions differ: {}x{} vs {}x{}",
            base.width(),
            base.height(),
            other.width(),
            other.height()
        )));
    }
    let grid = BlockGrid::new(base.width(), base.height(), params.block_size)?;
    let origins: Vec<(usize, usize)> = grid.origins().collect();
    origins
        .par_iter()
        .map(|&origin| {
            let d = block_disparity(map, origin, params.block_size)?;
            let seed = seed_position(
                origin,
                d,
                params.disparity_sign,
                base.width(),
                base.height(),
                params.block_size,
            );
            Ok(if params.fast {
                fast_match(origin, seed, d)
            } else {
                find_best_match(base, other, origin, seed, d, params)
            })
        })
        .collect()
}
