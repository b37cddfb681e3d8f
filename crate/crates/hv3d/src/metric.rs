//! Per-frame metric assembly: viewing geometry, cyclopean-view quality over
//! matched block pairs, depth-field quality, and their exponent-weighted
//! combination, with optional per-frame base-view alternation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dct_csf::{apply_csf, fuse_blocks_3d_dct, idct2, CsfMask};
use crate::matching::{match_frame, BlockGrid, BlockMatch, MatchParams};
use crate::quality2d::{ssim_block, vif, Plane, VifParams};
use crate::video_io::{DepthSource, DisparityMap, Frame, StereoSequence};
use crate::{Error, Result};

/// Below this, the per-frame maximum of the local depth variances counts as
/// flat and the variance term defaults to 1.
pub const FLAT_DEPTH_EPSILON: f64 = 1e-12;

/// Physical viewing setup used to derive the fovea block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplayGeometry {
    pub viewing_distance_mm: f64,
    pub display_height_mm: f64,
    pub vertical_resolution_px: usize,
    /// Full foveal aperture (2-alpha) in degrees; physiologically 0.5 to 2.
    pub fovea_full_angle_deg: f64,
}

impl Default for DisplayGeometry {
    fn default() -> Self {
        DisplayGeometry {
            viewing_distance_mm: 3000.0,
            display_height_mm: 773.0,
            vertical_resolution_px: 1080,
            fovea_full_angle_deg: 0.88,
        }
    }
}

impl DisplayGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.viewing_distance_mm)
            || !positive(self.display_height_mm)
            || self.vertical_resolution_px == 0
        {
            return Err(Error::invalid(
                "viewing distance, display height, and resolution must be positive",
            ));
        }
        if !(0.5..=2.0).contains(&self.fovea_full_angle_deg) {
            return Err(Error::invalid(format!(
                "foveal aperture must lie in [0.5, 2] degrees, got {}",
                self.fovea_full_angle_deg
            )));
        }
        Ok(())
    }
}

/// Screen-space side (pixels) of the square fully covered by the fovea at
/// the design distance: round(2 d h tan(alpha) / H), snapped to the nearest
/// multiple of the block side `m` (at least m).
pub fn fovea_block_size(geom: &DisplayGeometry, m: usize) -> Result<usize> {
    geom.validate()?;
    if m < 2 {
        return Err(Error::invalid(format!("block side must be >= 2, got {m}")));
    }
    let alpha = (geom.fovea_full_angle_deg / 2.0).to_radians();
    let px = 2.0 * geom.viewing_distance_mm * geom.vertical_resolution_px as f64 * alpha.tan()
        / geom.display_height_mm;
    let rounded = px.round();
    let multiples = (rounded / m as f64).round() as usize;
    Ok(multiples.max(1) * m)
}

/// Everything that shapes a metric run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricParams {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
    /// Block side m for matching and fusion.
    pub block_size: usize,
    /// Full search window side M (candidates span +/- M/2 around the seed).
    pub search_range: usize,
    /// Outer window side k for local depth variance.
    pub fovea_k: usize,
    /// Trust disparity seeds directly instead of refining by search.
    pub fast_mode: bool,
    /// +1 when positive disparity shifts a left-view block towards smaller
    /// x in the right view; -1 for the opposite convention.
    pub disparity_sign: i32,
    /// Alternate the base view (and with it the depth map) every frame.
    pub alternate_views: bool,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            beta1: 0.4,
            beta2: 0.1,
            beta3: 0.29,
            block_size: 16,
            search_range: 64,
            fovea_k: 64,
            fast_mode: false,
            disparity_sign: 1,
            alternate_views: true,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("beta3", self.beta3),
        ] {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and >= 0, got {b}"
                )));
            }
        }
        if self.block_size < 2 {
            return Err(Error::invalid(format!(
                "block side must be >= 2, got {}",
                self.block_size
            )));
        }
        if self.search_range < self.block_size {
            return Err(Error::invalid(format!(
                "search window {} is smaller than the block side {}",
                self.search_range, self.block_size
            )));
        }
        if self.fovea_k < self.block_size {
            return Err(Error::invalid(format!(
                "variance window {} is smaller than the block side {}",
                self.fovea_k, self.block_size
            )));
        }
        if self.disparity_sign != 1 && self.disparity_sign != -1 {
            return Err(Error::invalid(format!(
                "disparity sign must be +1 or -1, got {}",
                self.disparity_sign
            )));
        }
        Ok(())
    }

    fn match_params(&self, disparity_sign: i32) -> MatchParams {
        MatchParams {
            block_size: self.block_size,
            search_range: self.search_range,
            disparity_sign,
            fast: self.fast_mode,
        }
    }
}

/// Degenerate-input and mode markers for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameFlags {
    /// The reference depth field was flat (or non-positive); the variance
    /// term defaulted to 1.
    pub depth_degenerate: bool,
    /// The mean cyclopean score was negative and got floored at 0.
    pub negative_q_floored: bool,
    /// Alternation was requested but right-to-left maps are missing; the
    /// left view served as base.
    pub alternation_fallback: bool,
    /// The right view served as base for this frame.
    pub base_right: bool,
}

impl FrameFlags {
    pub fn any_degenerate(&self) -> bool {
        self.depth_degenerate || self.negative_q_floored
    }
}

/// All per-frame outputs: the three components, their combination, and flags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameScore {
    pub frame_index: usize,
    /// Mean structural similarity of the fused blocks, before exponents.
    pub q_cyclopean_mean: f64,
    pub vif_depth: f64,
    pub variance_term: f64,
    pub hv3d: f64,
    pub block_count: usize,
    pub flags: FrameFlags,
}

/// Depth-side results for one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthQuality {
    pub vif_depth: f64,
    pub variance_term: f64,
    pub depth_degenerate: bool,
}

/// Divides every value by the frame maximum. A non-positive maximum yields
/// all zeros plus the degenerate flag.
pub fn normalize_depth(map: &DisparityMap) -> (Vec<f64>, bool) {
    let values = map.values_px();
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return (vec![0.0; values.len()], true);
    }
    (values.iter().map(|v| v / max).collect(), false)
}

/// Variance (divisor: sample count - 1) over the k-by-k window centered on
/// the m-by-m block at `inner_origin`, clipped to the frame.
pub fn depth_variance_block(
    values: &[f64],
    width: usize,
    height: usize,
    inner_origin: (usize, usize),
    m: usize,
    k: usize,
) -> Result<f64> {
    if values.len() != width * height {
        return Err(Error::dimension(format!(
            "{} values for a {width}x{height} map",
            values.len()
        )));
    }
    let (x0, y0) = inner_origin;
    if x0 + m > width || y0 + m > height {
        return Err(Error::dimension(format!(
            "{m}x{m} block at ({x0}, {y0}) exceeds the {width}x{height} map"
        )));
    }
    let margin = ((k as i64) - (m as i64)) / 2;
    let ox0 = (x0 as i64 - margin).max(0) as usize;
    let oy0 = (y0 as i64 - margin).max(0) as usize;
    let ox1 = ((x0 as i64 - margin) + k as i64).min(width as i64) as usize;
    let oy1 = ((y0 as i64 - margin) + k as i64).min(height as i64) as usize;
    let count = (ox1 - ox0) * (oy1 - oy0);
    if count < 2 {
        return Err(Error::invalid(
            "variance window clipped to fewer than 2 samples",
        ));
    }
    let mut sum = 0.0;
    for y in oy0..oy1 {
        for x in ox0..ox1 {
            sum += values[y * width + x];
        }
    }
    let mean = sum / count as f64;
    let mut ss = 0.0;
    for y in oy0..oy1 {
        for x in ox0..ox1 {
            let d = values[y * width + x] - mean;
            ss += d * d;
        }
    }
    Ok(ss / (count - 1) as f64)
}

/// Mean local depth variance over the block grid, normalized by the frame's
/// maximum block variance. A flat field (max below `FLAT_DEPTH_EPSILON`)
/// returns 1 with the degenerate flag, so flat-depth scenes keep a neutral
/// depth weighting instead of a vanishing score.
pub fn depth_variance_term(
    values: &[f64],
    width: usize,
    height: usize,
    m: usize,
    k: usize,
) -> Result<(f64, bool)> {
    let grid = BlockGrid::new(width, height, m)?;
    let mut variances = Vec::with_capacity(grid.len());
    for origin in grid.origins() {
        variances.push(depth_variance_block(values, width, height, origin, m, k)?);
    }
    let max = variances.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max <= FLAT_DEPTH_EPSILON {
        return Ok((1.0, true));
    }
    let mean = variances.iter().sum::<f64>() / variances.len() as f64;
    Ok((mean / max, false))
}

/// Depth-field quality of one frame: information fidelity on the raw maps
/// and the variance term on the per-frame-normalized reference map.
pub fn depth_quality_frame(
    ref_map: &DisparityMap,
    dist_map: &DisparityMap,
    m: usize,
    k: usize,
) -> Result<DepthQuality> {
    if ref_map.width() != dist_map.width() || ref_map.height() != dist_map.height() {
        return Err(Error::dimension(format!(
            "depth maps differ in size: {}x{} vs {}x{}",
            ref_map.width(),
            ref_map.height(),
            dist_map.width(),
            dist_map.height()
        )));
    }
    let vif_depth = vif(
        &Plane::from_disparity(ref_map),
        &Plane::from_disparity(dist_map),
        &VifParams::default(),
    )?;
    let (normalized, zero_field) = normalize_depth(ref_map);
    let (variance_term, flat) =
        depth_variance_term(&normalized, ref_map.width(), ref_map.height(), m, k)?;
    Ok(DepthQuality {
        vif_depth,
        variance_term,
        depth_degenerate: zero_field || flat,
    })
}

/// Structural similarity of the fused views at every matched block pair,
/// using the same (reference-derived) coordinates for both sequences.
///
/// Returns the mean over blocks plus the per-block scores.
pub fn cyclopean_quality_frame(
    ref_base: &Frame,
    ref_other: &Frame,
    dist_base: &Frame,
    dist_other: &Frame,
    matches: &[BlockMatch],
    m: usize,
) -> Result<(f64, Vec<f64>)> {
    if matches.is_empty() {
        return Err(Error::invalid("no matched blocks to score"));
    }
    for frame in [ref_other, dist_base, dist_other] {
        if frame.width() != ref_base.width() || frame.height() != ref_base.height() {
            return Err(Error::dimension(format!(
                "frame sizes differ: {}x{} vs {}x{}",
                frame.width(),
                frame.height(),
                ref_base.width(),
                ref_base.height()
            )));
        }
    }
    for mt in matches {
        for (x, y) in [mt.base_origin, mt.match_origin] {
            if x + m > ref_base.width() || y + m > ref_base.height() {
                return Err(Error::dimension(format!(
                    "matched block at ({x}, {y}) exceeds the frame"
                )));
            }
        }
    }
    let mask = CsfMask::new(m)?;
    let scores: Vec<f64> = matches
        .par_iter()
        .map(|mt| -> Result<f64> {
            let fused_ref = fuse_blocks_3d_dct(
                &ref_base.block_f64(mt.base_origin.0, mt.base_origin.1, m),
                &ref_other.block_f64(mt.match_origin.0, mt.match_origin.1, m),
                m,
            )?;
            let fused_dist = fuse_blocks_3d_dct(
                &dist_base.block_f64(mt.base_origin.0, mt.base_origin.1, m),
                &dist_other.block_f64(mt.match_origin.0, mt.match_origin.1, m),
                m,
            )?;
            let a = idct2(&apply_csf(&fused_ref, &mask)?);
            let b = idct2(&apply_csf(&fused_dist, &mask)?);
            ssim_block(&a, &b)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    Ok((mean, scores))
}

/// Combines the three per-frame components under the configured exponents.
/// A negative cyclopean mean is floored at 0 first (fractional powers of
/// negatives are undefined); the returned flag records that it happened.
pub fn hv3d_frame(
    q_cyclopean_mean: f64,
    vif_depth: f64,
    variance_term: f64,
    params: &MetricParams,
) -> (f64, bool) {
    let floored = q_cyclopean_mean < 0.0;
    let q = q_cyclopean_mean.max(0.0);
    let hv3d =
        q.powf(params.beta1) * vif_depth.powf(params.beta2) * variance_term.powf(params.beta3);
    (hv3d, floored)
}

struct FramePlan<'a> {
    ref_base: &'a Frame,
    ref_other: &'a Frame,
    dist_base: &'a Frame,
    dist_other: &'a Frame,
    ref_map: &'a DisparityMap,
    dist_map: &'a DisparityMap,
    disparity_sign: i32,
    flags: FrameFlags,
}

fn plan_frame<'a>(
    reference: &'a StereoSequence,
    distorted: &'a StereoSequence,
    t: usize,
    params: &MetricParams,
) -> Result<FramePlan<'a>> {
    let have_r2l = reference.disparity_r2l.is_some() && distorted.disparity_r2l.is_some();
    let want_right = params.alternate_views && t % 2 == 1;
    let base_right = want_right && have_r2l;
    let fallback = want_right && !have_r2l;

    if base_right {
        let ref_r2l = reference.disparity_r2l.as_ref().expect("checked above");
        let dist_r2l = distorted.disparity_r2l.as_ref().expect("checked above");
        return Ok(FramePlan {
            ref_base: reference.right.frame(t),
            ref_other: reference.left.frame(t),
            dist_base: distorted.right.frame(t),
            dist_other: distorted.left.frame(t),
            ref_map: &ref_r2l[t],
            dist_map: &dist_r2l[t],
            // A positive right-to-left disparity shifts towards larger x,
            // the mirror image of the left-base convention.
            disparity_sign: -params.disparity_sign,
            flags: FrameFlags {
                base_right: true,
                ..FrameFlags::default()
            },
        });
    }

    let use_r2l_depth =
        !params.alternate_views && reference.depth_source == DepthSource::RightToLeft;
    let (ref_map, dist_map) = if use_r2l_depth {
        if !have_r2l {
            return Err(Error::invalid(
                "depth source is right_to_left but right-to-left maps are missing",
            ));
        }
        (
            &reference.disparity_r2l.as_ref().expect("checked above")[t],
            &distorted.disparity_r2l.as_ref().expect("checked above")[t],
        )
    } else {
        (&reference.disparity_l2r[t], &distorted.disparity_l2r[t])
    };
    Ok(FramePlan {
        ref_base: reference.left.frame(t),
        ref_other: reference.right.frame(t),
        dist_base: distorted.left.frame(t),
        dist_other: distorted.right.frame(t),
        ref_map,
        dist_map,
        disparity_sign: params.disparity_sign,
        flags: FrameFlags {
            alternation_fallback: fallback,
            ..FrameFlags::default()
        },
    })
}

fn score_frame(
    reference: &StereoSequence,
    distorted: &StereoSequence,
    t: usize,
    params: &MetricParams,
) -> Result<FrameScore> {
    let plan = plan_frame(reference, distorted, t, params)?;
    let matches = match_frame(
        plan.ref_base,
        plan.ref_other,
        plan.ref_map,
        &params.match_params(plan.disparity_sign),
    )?;
    let (q_mean, _per_block) = cyclopean_quality_frame(
        plan.ref_base,
        plan.ref_other,
        plan.dist_base,
        plan.dist_other,
        &matches,
        params.block_size,
    )?;
    let depth = depth_quality_frame(
        plan.ref_map,
        plan.dist_map,
        params.block_size,
        params.fovea_k,
    )?;
    let (hv3d, floored) = hv3d_frame(q_mean, depth.vif_depth, depth.variance_term, params);
    Ok(FrameScore {
        frame_index: t,
        q_cyclopean_mean: q_mean,
        vif_depth: depth.vif_depth,
        variance_term: depth.variance_term,
        hv3d,
        block_count: matches.len(),
        flags: FrameFlags {
            depth_degenerate: depth.depth_degenerate,
            negative_q_floored: floored,
            ..plan.flags
        },
    })
}

/// Scores every frame of the distorted clip against the reference.
///
/// Even-indexed frames use the left view as base with its left-to-right
/// map; odd-indexed frames switch to the right view and the right-to-left
/// map when alternation is on and those maps exist (otherwise the left base
/// is kept and the frame is flagged). Frames are scored in parallel but
/// returned in order.
pub fn hv3d_sequence(
    reference: &StereoSequence,
    distorted: &StereoSequence,
    params: &MetricParams,
) -> Result<Vec<FrameScore>> {
    params.validate()?;
    if reference.len() != distorted.len() {
        return Err(Error::dimension(format!(
            "sequence lengths differ: {} vs {}",
            reference.len(),
            distorted.len()
        )));
    }
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(Error::dimension(format!(
            "sequence sizes differ: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            distorted.width(),
            distorted.height()
        )));
    }
    (0..reference.len())
        .into_par_iter()
        .map(|t| score_frame(reference, distorted, t, params))
        .collect()
}
