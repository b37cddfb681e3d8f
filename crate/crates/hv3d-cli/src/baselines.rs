//! 2-D baseline metrics on stereo clips: each view's frames are scored
//! independently and the values averaged over frames and views.

use hv3d::quality2d::{psnr, ssim_block, vif, Plane, VifParams};
use hv3d::video_io::{Frame, StereoSequence};
use serde::Serialize;

/// Tile side used to average block SSIM over a whole frame.
pub const SSIM_TILE: usize = 16;

/// Mean block SSIM over non-overlapping full tiles; frames smaller than one
/// tile are scored as a single window.
pub fn frame_ssim(a: &Frame, b: &Frame) -> hv3d::Result<f64> {
    let (w, h) = (a.width(), a.height());
    if w < SSIM_TILE || h < SSIM_TILE {
        let pa: Vec<f64> = a.luma().iter().map(|&v| v as f64).collect();
        let pb: Vec<f64> = b.luma().iter().map(|&v| v as f64).collect();
        return ssim_block(&pa, &pb);
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for y in (0..=h - SSIM_TILE).step_by(SSIM_TILE) {
        for x in (0..=w - SSIM_TILE).step_by(SSIM_TILE) {
            sum += ssim_block(&a.block_f64(x, y, SSIM_TILE), &b.block_f64(x, y, SSIM_TILE))?;
            count += 1;
        }
    }
    Ok(sum / count as f64)
}

/// Per-entry pooled baseline scores.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BaselineScores {
    pub psnr: f64,
    pub ssim: f64,
    pub vif: f64,
}

fn view_pairs<'a>(
    reference: &'a StereoSequence,
    distorted: &'a StereoSequence,
) -> impl Iterator<Item = (&'a Frame, &'a Frame)> {
    reference
        .left
        .frames()
        .iter()
        .zip(distorted.left.frames())
        .chain(
            reference
                .right
                .frames()
                .iter()
                .zip(distorted.right.frames()),
        )
}

pub fn entry_psnr(reference: &StereoSequence, distorted: &StereoSequence) -> hv3d::Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (r, d) in view_pairs(reference, distorted) {
        sum += psnr(r, d)?;
        n += 1;
    }
    Ok(sum / n as f64)
}

pub fn entry_ssim(reference: &StereoSequence, distorted: &StereoSequence) -> hv3d::Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for (r, d) in view_pairs(reference, distorted) {
        sum += frame_ssim(r, d)?;
        n += 1;
    }
    Ok(sum / n as f64)
}

pub fn entry_vif(reference: &StereoSequence, distorted: &StereoSequence) -> hv3d::Result<f64> {
    let params = VifParams::default();
    let mut sum = 0.0;
    let mut n = 0usize;
    for (r, d) in view_pairs(reference, distorted) {
        sum += vif(&Plane::from_frame(r), &Plane::from_frame(d), &params)?;
        n += 1;
    }
    Ok(sum / n as f64)
}

pub fn entry_baselines(
    reference: &StereoSequence,
    distorted: &StereoSequence,
) -> hv3d::Result<BaselineScores> {
    Ok(BaselineScores {
        psnr: entry_psnr(reference, distorted)?,
        ssim: entry_ssim(reference, distorted)?,
        vif: entry_vif(reference, distorted)?,
    })
}
