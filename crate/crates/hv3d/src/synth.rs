//! Deterministic synthetic stereo clips for tests and benchmarks: a pure
//! horizontal translation pair whose disparity is exact everywhere, and a
//! layered scene with a moving foreground at a distinct depth.

use std::path::Path;

use crate::video_io::{
    write_disparity_raw, write_yuv_sequence, DisparityMap, Frame, StereoSequence, VideoSequence,
    ViewPaths,
};
use crate::{Error, Result};

const FLAT_LUMA: u8 = 128;
/// Width of the flat strip at each end of the translation texture, beyond
/// the disparity itself. Sized so every block whose seed clamps at a frame
/// edge sees constant luma in both views (see `translation_clip`).
const PAD_BEYOND_DISPARITY: usize = 32;
const CLIP_FPS: f64 = 25.0;

/// Deterministic value-noise texture in [64, 192), flat-shading safe: the
/// range keeps brightness shifts up to +50 clear of the 8-bit ceiling.
fn tex_sample(x: usize, y: usize, t: usize, salt: u64) -> u8 {
    let mut h = (x as u64)
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add((y as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f))
        .wrapping_add((t as u64).wrapping_mul(0x1656_67b1_9e37_79f9))
        .wrapping_add(salt);
    h ^= h >> 33;
    h = h.wrapping_mul(0xff51_afd7_ed55_8ccd);
    h ^= h >> 33;
    64 + (h % 128) as u8
}

/// A stereo pair that is an exact horizontal translation: the right view
/// equals the left view shifted `disparity` pixels, so the supplied maps
/// predict every correspondence perfectly.
///
/// Both ends of the underlying texture are flat strips wide enough that
/// blocks whose predicted position clamps at a frame edge are constant in
/// both views; a refinement search then finds zero error at the prediction
/// itself, so fast and full matching agree on every block.
///
/// Stored disparities are `disparity` with a sparse sprinkle of
/// `disparity + 1` (every block's median stays `disparity`, but the depth
/// field is not flat).
pub fn translation_clip(
    width: usize,
    height: usize,
    frames: usize,
    disparity: usize,
) -> Result<StereoSequence> {
    let pad = PAD_BEYOND_DISPARITY + disparity;
    if width < 2 * pad + 32 {
        return Err(Error::invalid(format!(
            "translation clip needs width >= {}, got {width}",
            2 * pad + 32
        )));
    }
    if height == 0 || frames == 0 {
        return Err(Error::invalid("translation clip needs height and frames"));
    }
    if disparity > 200 {
        return Err(Error::invalid(format!(
            "translation disparity must fit comfortably in 8 bits, got {disparity}"
        )));
    }
    let texture_len = width + disparity;
    let sample = |u: usize, y: usize, t: usize| -> u8 {
        if u < pad || u >= texture_len - pad {
            FLAT_LUMA
        } else {
            tex_sample(u, y, t, 0x7431)
        }
    };

    let mut left = Vec::with_capacity(frames);
    let mut right = Vec::with_capacity(frames);
    let mut l2r = Vec::with_capacity(frames);
    let mut r2l = Vec::with_capacity(frames);
    for t in 0..frames {
        let mut left_luma = Vec::with_capacity(width * height);
        let mut right_luma = Vec::with_capacity(width * height);
        let mut stored = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                left_luma.push(sample(x, y, t));
                right_luma.push(sample(x + disparity, y, t));
                let jitter = usize::from((x + y) % 5 == 0);
                stored.push((disparity + jitter) as i32);
            }
        }
        left.push(Frame::new(width, height, left_luma)?);
        right.push(Frame::new(width, height, right_luma)?);
        let map = DisparityMap::from_values(width, height, stored, 1.0)?;
        l2r.push(map.clone());
        r2l.push(map);
    }
    StereoSequence::new(
        VideoSequence::new(width, height, CLIP_FPS, left)?,
        VideoSequence::new(width, height, CLIP_FPS, right)?,
        l2r,
        Some(r2l),
    )
}

/// Background and foreground disparities used by `layered_clip` for a given
/// frame width.
pub fn layered_disparities(width: usize) -> (usize, usize) {
    let bg = (width / 32).max(2);
    let fg = (3 * width / 16).max(bg + 4);
    (bg, fg)
}

/// Triangle-wave bounce of the foreground rectangle's left edge.
fn bounce(t: usize, lo: usize, hi: usize) -> usize {
    if hi <= lo {
        return lo;
    }
    let span = hi - lo;
    let phase = t % (2 * span);
    lo + if phase < span {
        phase
    } else {
        2 * span - phase
    }
}

/// A two-layer scene: textured background plus a textured foreground
/// rectangle that slides horizontally, sitting at a nearer depth.
///
/// A point with disparity d appears at left-view column x and right-view
/// column x - d. The depth field takes two distinct values, so variance
/// statistics never degenerate.
pub fn layered_clip(width: usize, height: usize, frames: usize) -> Result<StereoSequence> {
    let (bg_disp, fg_disp) = layered_disparities(width);
    let rect_w = width / 4;
    let rect_h = height / 3;
    if width < fg_disp + rect_w + 8 || height < rect_h + 8 || rect_w < 4 || rect_h < 4 {
        return Err(Error::invalid(format!(
            "layered clip needs a larger canvas than {width}x{height}"
        )));
    }
    if frames == 0 {
        return Err(Error::invalid("layered clip needs at least one frame"));
    }

    let rect_y = (height - rect_h) / 2;
    let mut left = Vec::with_capacity(frames);
    let mut right = Vec::with_capacity(frames);
    let mut l2r = Vec::with_capacity(frames);
    let mut r2l = Vec::with_capacity(frames);
    for t in 0..frames {
        let rect_x = bounce(t, fg_disp, width - rect_w);
        let in_rect = |x: usize, y: usize, shift: usize| -> bool {
            let rx = rect_x - shift;
            (rx..rx + rect_w).contains(&x) && (rect_y..rect_y + rect_h).contains(&y)
        };
        // Foreground texture is anchored to the rectangle so it rides along.
        let fg_tex = |x: usize, y: usize, shift: usize| {
            tex_sample(x + shift - rect_x, y - rect_y, t, 0xf00d)
        };

        let mut left_luma = Vec::with_capacity(width * height);
        let mut right_luma = Vec::with_capacity(width * height);
        let mut stored_l2r = Vec::with_capacity(width * height);
        let mut stored_r2l = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                left_luma.push(if in_rect(x, y, 0) {
                    fg_tex(x, y, 0)
                } else {
                    tex_sample(x, y, t / 4, 0xbeef)
                });
                right_luma.push(if in_rect(x, y, fg_disp) {
                    fg_tex(x, y, fg_disp)
                } else {
                    tex_sample(x + bg_disp, y, t / 4, 0xbeef)
                });
                stored_l2r.push(if in_rect(x, y, 0) { fg_disp } else { bg_disp } as i32);
                stored_r2l.push(if in_rect(x, y, fg_disp) {
                    fg_disp
                } else {
                    bg_disp
                } as i32);
            }
        }
        left.push(Frame::new(width, height, left_luma)?);
        right.push(Frame::new(width, height, right_luma)?);
        l2r.push(DisparityMap::from_values(width, height, stored_l2r, 1.0)?);
        r2l.push(DisparityMap::from_values(width, height, stored_r2l, 1.0)?);
    }
    StereoSequence::new(
        VideoSequence::new(width, height, CLIP_FPS, left)?,
        VideoSequence::new(width, height, CLIP_FPS, right)?,
        l2r,
        Some(r2l),
    )
}

/// Writes a clip's views and disparity maps under `dir` with the given
/// prefix, returning manifest-ready paths.
pub fn save_view_files(seq: &StereoSequence, dir: &Path, prefix: &str) -> Result<ViewPaths> {
    let left = dir.join(format!("{prefix}_left.yuv"));
    let right = dir.join(format!("{prefix}_right.yuv"));
    let disp_l2r = dir.join(format!("{prefix}_l2r.raw"));
    write_yuv_sequence(&left, &seq.left)?;
    write_yuv_sequence(&right, &seq.right)?;
    write_disparity_raw(&disp_l2r, &seq.disparity_l2r)?;
    let disp_r2l = match &seq.disparity_r2l {
        Some(maps) => {
            let path = dir.join(format!("{prefix}_r2l.raw"));
            write_disparity_raw(&path, maps)?;
            Some(path)
        }
        None => None,
    };
    Ok(ViewPaths {
        left,
        right,
        disp_l2r,
        disp_r2l,
    })
}
