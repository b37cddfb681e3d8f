//! Deterministic, seeded distortion generators: additive Gaussian noise,
//! separable Gaussian blur, and brightness shifts, with constant or
//! per-frame-random severity over time.
//!
//! Randomness comes from a counter-based generator keyed per view and
//! streamed per frame, so output is bit-identical for a fixed seed no
//! matter how frames are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::video_io::{DisparityMap, Frame, StereoSequence, VideoSequence};
use crate::{Error, Result};

/// Seed-derivation offsets: left view 0, right view 1, left-to-right
/// disparity 2, right-to-left disparity 3.
pub const VIEW_LEFT: u32 = 0;
pub const VIEW_RIGHT: u32 = 1;
pub const VIEW_DISP_L2R: u32 = 2;
pub const VIEW_DISP_R2L: u32 = 3;

const PARAM_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// One distortion family with its severity parameter(s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistortionKind {
    /// Additive white Gaussian noise of the given variance, expressed as a
    /// fraction of the squared 8-bit range (pixel variance = variance * 255^2).
    GaussianNoise { variance: f64 },
    /// Separable Gaussian blur; even sizes are promoted to the next odd tap
    /// count, edges replicate.
    GaussianBlur { size: usize, sigma: f64 },
    /// Constant luma shift, clamped to 0..=255.
    BrightnessShift { delta: i32 },
}

impl DistortionKind {
    pub fn label(&self) -> &'static str {
        match self {
            DistortionKind::GaussianNoise { .. } => "gaussian_noise",
            DistortionKind::GaussianBlur { .. } => "gaussian_blur",
            DistortionKind::BrightnessShift { .. } => "brightness_shift",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            DistortionKind::GaussianNoise { variance } => {
                if variance < 0.0 {
                    return Err(Error::invalid(format!(
                        "noise variance must be >= 0, got {variance}"
                    )));
                }
            }
            DistortionKind::GaussianBlur { size, sigma } => {
                if size == 0 {
                    return Err(Error::invalid("blur kernel size must be positive"));
                }
                if sigma < 0.0 {
                    return Err(Error::invalid(format!(
                        "blur sigma must be >= 0, got {sigma}"
                    )));
                }
            }
            DistortionKind::BrightnessShift { .. } => {}
        }
        Ok(())
    }
}

/// How severity evolves over frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TemporalMode {
    /// The configured severity applies to every frame.
    Constant,
    /// The leading severity parameter is redrawn uniformly from [lo, hi]
    /// for each frame (noise: variance; blur: sigma; brightness: delta).
    PerFrameRandom { lo: f64, hi: f64 },
}

/// Complete, serializable description of one distortion run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    #[serde(flatten)]
    pub kind: DistortionKind,
    #[serde(flatten)]
    pub temporal: TemporalMode,
    pub seed: u64,
}

/// Per-frame record of what was actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AppliedFrameParams {
    pub frame_index: usize,
    pub kind: DistortionKind,
}

/// Counter-based generator for one (seed, view, frame) triple.
pub fn frame_rng(seed: u64, view_index: u32, frame_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ view_index as u64);
    rng.set_stream(frame_index);
    rng
}

/// Adds N(0, variance * 255^2) noise per pixel, rounding and clamping to
/// the 8-bit range.
pub fn add_gaussian_noise(frame: &Frame, variance: f64, rng: &mut ChaCha8Rng) -> Result<Frame> {
    if variance < 0.0 {
        return Err(Error::invalid(format!(
            "noise variance must be >= 0, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(frame.clone());
    }
    let sigma = variance.sqrt() * 255.0;
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let luma = frame
        .luma()
        .iter()
        .map(|&v| (v as f64 + normal.sample(rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Frame::new(frame.width(), frame.height(), luma)
}

/// Normalized 1-D Gaussian taps; even sizes are promoted to the next odd
/// count. Returns the taps and the effective size. A vanishing sigma
/// degenerates to the identity kernel.
pub fn gaussian_kernel(size: usize, sigma: f64) -> (Vec<f64>, usize) {
    let effective = if size.is_multiple_of(2) {
        size + 1
    } else {
        size
    };
    if sigma <= 1e-12 || effective == 1 {
        return (vec![1.0], 1);
    }
    let radius = (effective / 2) as i64;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|j| (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    (taps, effective)
}

fn convolve_separable(data: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let radius = (taps.len() / 2) as i64;
    let mut rows = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sx = (x as i64 + k as i64 - radius).clamp(0, width as i64 - 1) as usize;
                acc += t * data[y * width + sx];
            }
            rows[y * width + x] = acc;
        }
    }
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (k, &t) in taps.iter().enumerate() {
                let sy = (y as i64 + k as i64 - radius).clamp(0, height as i64 - 1) as usize;
                acc += t * rows[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

/// Separable Gaussian blur with replicated edges. Returns the blurred frame
/// and the effective (odd) tap count actually used.
pub fn gaussian_blur(frame: &Frame, size: usize, sigma: f64) -> Result<(Frame, usize)> {
    if size == 0 {
        return Err(Error::invalid("blur kernel size must be positive"));
    }
    let (taps, effective) = gaussian_kernel(size, sigma);
    if taps.len() == 1 {
        return Ok((frame.clone(), effective));
    }
    let data: Vec<f64> = frame.luma().iter().map(|&v| v as f64).collect();
    let blurred = convolve_separable(&data, frame.width(), frame.height(), &taps);
    let luma = blurred
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok((Frame::new(frame.width(), frame.height(), luma)?, effective))
}

/// Adds `delta` to every luma sample, clamping to the 8-bit range.
pub fn brightness_shift(frame: &Frame, delta: i32) -> Frame {
    let luma = frame
        .luma()
        .iter()
        .map(|&v| (v as i32 + delta).clamp(0, 255) as u8)
        .collect();
    Frame::new(frame.width(), frame.height(), luma).expect("dimensions unchanged")
}

/// Resolves the severity for `frame_index` under the temporal mode; the
/// per-frame draw uses its own stream so pixel noise is unaffected.
pub fn resolve_frame_kind(spec: &DistortionSpec, frame_index: usize) -> DistortionKind {
    match spec.temporal {
        TemporalMode::Constant => spec.kind,
        TemporalMode::PerFrameRandom { lo, hi } => {
            let mut rng = frame_rng(spec.seed ^ PARAM_STREAM_SALT, u32::MAX, frame_index as u64);
            let value = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
            match spec.kind {
                DistortionKind::GaussianNoise { .. } => {
                    DistortionKind::GaussianNoise { variance: value }
                }
                DistortionKind::GaussianBlur { size, .. } => {
                    DistortionKind::GaussianBlur { size, sigma: value }
                }
                DistortionKind::BrightnessShift { .. } => DistortionKind::BrightnessShift {
                    delta: value.round() as i32,
                },
            }
        }
    }
}

fn distort_frame(
    frame: &Frame,
    kind: &DistortionKind,
    seed: u64,
    view_index: u32,
    frame_index: usize,
) -> Result<Frame> {
    match *kind {
        DistortionKind::GaussianNoise { variance } => {
            let mut rng = frame_rng(seed, view_index, frame_index as u64);
            add_gaussian_noise(frame, variance, &mut rng)
        }
        DistortionKind::GaussianBlur { size, sigma } => {
            gaussian_blur(frame, size, sigma).map(|(f, _)| f)
        }
        DistortionKind::BrightnessShift { delta } => Ok(brightness_shift(frame, delta)),
    }
}

/// Applies the distortion to one view of a sequence, returning the result
/// and the per-frame severities that were used.
pub fn distort_video(
    seq: &VideoSequence,
    spec: &DistortionSpec,
    view_index: u32,
) -> Result<(VideoSequence, Vec<AppliedFrameParams>)> {
    spec.kind.validate()?;
    let mut frames = Vec::with_capacity(seq.len());
    let mut applied = Vec::with_capacity(seq.len());
    for (i, frame) in seq.frames().iter().enumerate() {
        let kind = resolve_frame_kind(spec, i);
        frames.push(distort_frame(frame, &kind, spec.seed, view_index, i)?);
        applied.push(AppliedFrameParams {
            frame_index: i,
            kind,
        });
    }
    Ok((
        VideoSequence::new(seq.width, seq.height, seq.frame_rate, frames)?,
        applied,
    ))
}

/// Applies the distortion to a disparity map where that is meaningful:
/// noise and blur perturb the stored values (clamped to 0..=255);
/// brightness is purely photometric and leaves the map unchanged.
pub fn distort_disparity(
    map: &DisparityMap,
    spec: &DistortionSpec,
    view_index: u32,
    frame_index: usize,
) -> Result<DisparityMap> {
    let kind = resolve_frame_kind(spec, frame_index);
    match kind {
        DistortionKind::BrightnessShift { .. } => Ok(map.clone()),
        _ => {
            let bytes: Vec<u8> = map
                .stored()
                .iter()
                .map(|&v| v.clamp(0, 255) as u8)
                .collect();
            let frame = Frame::new(map.width(), map.height(), bytes)?;
            let out = distort_frame(&frame, &kind, spec.seed, view_index, frame_index)?;
            DisparityMap::from_values(
                map.width(),
                map.height(),
                out.luma().iter().map(|&b| b as i32).collect(),
                map.scale(),
            )
        }
    }
}

/// Distorts both views and the disparity maps of a stereo clip with seeds
/// derived per view.
pub fn distort_stereo(
    stereo: &StereoSequence,
    spec: &DistortionSpec,
) -> Result<(StereoSequence, Vec<AppliedFrameParams>)> {
    let (left, applied) = distort_video(&stereo.left, spec, VIEW_LEFT)?;
    let (right, _) = distort_video(&stereo.right, spec, VIEW_RIGHT)?;
    let l2r = stereo
        .disparity_l2r
        .iter()
        .enumerate()
        .map(|(i, m)| distort_disparity(m, spec, VIEW_DISP_L2R, i))
        .collect::<Result<Vec<_>>>()?;
    let r2l = stereo
        .disparity_r2l
        .as_ref()
        .map(|maps| {
            maps.iter()
                .enumerate()
                .map(|(i, m)| distort_disparity(m, spec, VIEW_DISP_R2L, i))
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let mut out = StereoSequence::new(left, right, l2r, r2l)?;
    out.depth_source = stereo.depth_source;
    Ok((out, applied))
}
