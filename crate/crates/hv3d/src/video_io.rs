//! Raw YUV420p ingestion (luma plane only), 8-bit disparity maps in PGM or
//! headerless raw form, and JSON dataset manifests.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single 8-bit luma frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    luma: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, luma: Vec<u8>) -> Result<Self> {
        if luma.len() != width * height {
            return Err(Error::dimension(format!(
                "luma plane holds {} samples, expected {} for {width}x{height}",
                luma.len(),
                width * height
            )));
        }
        Ok(Frame {
            width,
            height,
            luma,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.luma[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.luma[y * self.width..(y + 1) * self.width]
    }

    /// Copies the `m`x`m` block with top-left corner (x0, y0) as f64 samples.
    pub fn block_f64(&self, x0: usize, y0: usize, m: usize) -> Vec<f64> {
        debug_assert!(x0 + m <= self.width && y0 + m <= self.height);
        let mut out = Vec::with_capacity(m * m);
        for y in y0..y0 + m {
            out.extend(self.row(y)[x0..x0 + m].iter().map(|&v| v as f64));
        }
        out
    }
}

/// Ordered luma frames with a nominal frame rate.
#[derive(Debug, Clone)]
pub struct VideoSequence {
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
    frames: Vec<Frame>,
}

impl VideoSequence {
    pub fn new(width: usize, height: usize, frame_rate: f64, frames: Vec<Frame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::invalid("a video sequence needs at least one frame"));
        }
        for f in &frames {
            if f.width != width || f.height != height {
                return Err(Error::dimension(format!(
                    "frame is {}x{}, sequence is {width}x{height}",
                    f.width, f.height
                )));
            }
        }
        Ok(VideoSequence {
            width,
            height,
            frame_rate,
            frames,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, i: usize) -> &Frame {
        &self.frames[i]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Row-major per-pixel disparity, stored as scaled integers; the physical
/// disparity in pixels is `stored * scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<i32>,
    scale: f64,
}

impl DisparityMap {
    pub fn from_values(width: usize, height: usize, values: Vec<i32>, scale: f64) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::dimension(format!(
                "disparity map holds {} values, expected {} for {width}x{height}",
                values.len(),
                width * height
            )));
        }
        if scale <= 0.0 || scale.is_nan() {
            return Err(Error::invalid(format!(
                "disparity scale must be positive, got {scale}"
            )));
        }
        Ok(DisparityMap {
            width,
            height,
            values,
            scale,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn stored(&self) -> &[i32] {
        &self.values
    }

    pub fn stored_at(&self, x: usize, y: usize) -> i32 {
        self.values[y * self.width + x]
    }

    /// Disparity in pixels at (x, y).
    pub fn value_px(&self, x: usize, y: usize) -> f64 {
        self.stored_at(x, y) as f64 * self.scale
    }

    /// All disparities in pixels, row-major.
    pub fn values_px(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64 * self.scale).collect()
    }
}

/// Which disparity set acts as the depth map when views do not alternate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSource {
    #[default]
    LeftToRight,
    RightToLeft,
}

/// A stereo clip: both views plus per-frame disparity maps.
#[derive(Debug, Clone)]
pub struct StereoSequence {
    pub left: VideoSequence,
    pub right: VideoSequence,
    pub disparity_l2r: Vec<DisparityMap>,
    pub disparity_r2l: Option<Vec<DisparityMap>>,
    pub depth_source: DepthSource,
}

impl StereoSequence {
    pub fn new(
        left: VideoSequence,
        right: VideoSequence,
        disparity_l2r: Vec<DisparityMap>,
        disparity_r2l: Option<Vec<DisparityMap>>,
    ) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::dimension(format!(
                "view frame counts differ: left {}, right {}",
                left.len(),
                right.len()
            )));
        }
        if left.width != right.width || left.height != right.height {
            return Err(Error::dimension(format!(
                "view dimensions differ: left {}x{}, right {}x{}",
                left.width, left.height, right.width, right.height
            )));
        }
        for maps in std::iter::once(&disparity_l2r).chain(disparity_r2l.iter()) {
            if maps.len() != left.len() {
                return Err(Error::dimension(format!(
                    "{} disparity maps for {} frames",
                    maps.len(),
                    left.len()
                )));
            }
            for m in maps {
                if m.width != left.width || m.height != left.height {
                    return Err(Error::dimension(format!(
                        "disparity map is {}x{}, frames are {}x{}",
                        m.width, m.height, left.width, left.height
                    )));
                }
            }
        }
        Ok(StereoSequence {
            left,
            right,
            disparity_l2r,
            disparity_r2l,
            depth_source: DepthSource::default(),
        })
    }

    pub fn width(&self) -> usize {
        self.left.width
    }

    pub fn height(&self) -> usize {
        self.left.height
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }
}

fn yuv_frame_bytes(width: usize, height: usize) -> u64 {
    (width * height) as u64 * 3 / 2
}

/// Reads a raw YUV420p file, keeping luma and skipping chroma.
///
/// The file size must be a whole multiple of one frame; `max_frames` caps how
/// many frames are read.
pub fn load_yuv_sequence(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    frame_rate: f64,
    max_frames: Option<usize>,
) -> Result<VideoSequence> {
    let path = path.as_ref();
    if !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::OddDimensions { width, height });
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    let frame_bytes = yuv_frame_bytes(width, height);
    if actual == 0 || actual % frame_bytes != 0 {
        return Err(Error::TruncatedYuv {
            path: path.to_path_buf(),
            width,
            height,
            frame_bytes,
            actual,
            expected: (actual / frame_bytes + 1) * frame_bytes,
        });
    }
    let available = (actual / frame_bytes) as usize;
    let count = max_frames.map_or(available, |m| m.min(available));
    if count == 0 {
        return Err(Error::invalid(format!(
            "{}: requested zero frames",
            path.display()
        )));
    }
    let luma_bytes = width * height;
    let chroma_bytes = frame_bytes as i64 - luma_bytes as i64;
    let mut reader = BufReader::new(file);
    let mut frames = Vec::with_capacity(count);
    for _ in 0..count {
        let mut luma = vec![0u8; luma_bytes];
        reader
            .read_exact(&mut luma)
            .map_err(|e| Error::io(path, e))?;
        reader
            .seek(SeekFrom::Current(chroma_bytes))
            .map_err(|e| Error::io(path, e))?;
        frames.push(Frame {
            width,
            height,
            luma,
        });
    }
    VideoSequence::new(width, height, frame_rate, frames)
}

/// Writes a sequence as raw YUV420p with zero-filled chroma planes.
pub fn write_yuv_sequence(path: impl AsRef<Path>, seq: &VideoSequence) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    let chroma = vec![0u8; seq.width * seq.height / 2];
    for frame in seq.frames() {
        writer
            .write_all(frame.luma())
            .map_err(|e| Error::io(path, e))?;
        writer.write_all(&chroma).map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes one disparity map as an 8-bit PGM (P5); stored values must fit 0..=255.
pub fn write_disparity_pgm(path: impl AsRef<Path>, map: &DisparityMap) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(map.values.len());
    for &v in &map.values {
        if !(0..=255).contains(&v) {
            return Err(Error::invalid(format!(
                "stored disparity {v} does not fit the 8-bit pgm range"
            )));
        }
        bytes.push(v as u8);
    }
    let mut out = format!("P5\n{} {}\n255\n", map.width, map.height).into_bytes();
    out.extend_from_slice(&bytes);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes per-frame disparity maps as one headerless raw file (concatenated
/// 8-bit planes); stored values must fit 0..=255.
pub fn write_disparity_raw(path: impl AsRef<Path>, maps: &[DisparityMap]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for map in maps {
        for &v in &map.values {
            if !(0..=255).contains(&v) {
                return Err(Error::invalid(format!(
                    "stored disparity {v} does not fit the 8-bit raw range"
                )));
            }
            out.push(v as u8);
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn parse_pgm(path: &Path, bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let malformed = |detail: &str| Error::MalformedPgm {
        path: path.to_path_buf(),
        detail: detail.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(malformed("missing P5 magic"));
    }
    // Scan header tokens, honoring '#' comments that run to end of line.
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        while pos < bytes.len() {
            match bytes[pos] {
                b' ' | b'\t' | b'\r' | b'\n' => pos += 1,
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(malformed("truncated header"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("unreadable header field"))?;
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    let (w, h, maxval) = (fields[0] as usize, fields[1] as usize, fields[2]);
    if maxval > 255 {
        return Err(Error::UnsupportedBitDepth {
            path: path.to_path_buf(),
            maxval,
        });
    }
    let data = &bytes[pos..];
    if data.len() != w * h {
        return Err(Error::DisparitySize {
            path: path.to_path_buf(),
            width: w,
            height: h,
            expected: (w * h) as u64,
            actual: data.len() as u64,
        });
    }
    Ok((w, h, data.to_vec()))
}

/// Loads per-frame disparity maps for a clip of `frames` frames.
///
/// Accepts a PGM (single map, reused for every frame) or a headerless raw
/// file holding one plane (reused) or at least `frames` concatenated planes,
/// of which the first `frames` are used.
pub fn load_disparity_maps(
    path: impl AsRef<Path>,
    width: usize,
    height: usize,
    scale: f64,
    frames: usize,
) -> Result<Vec<DisparityMap>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let plane = width * height;
    let planes: Vec<Vec<u8>> = if bytes.starts_with(b"P5") {
        let (w, h, data) = parse_pgm(path, &bytes)?;
        if w != width || h != height {
            return Err(Error::dimension(format!(
                "{}: pgm is {w}x{h}, expected {width}x{height}",
                path.display()
            )));
        }
        vec![data]
    } else if bytes.len() == plane {
        vec![bytes]
    } else if plane > 0 && bytes.len() % plane == 0 && bytes.len() >= plane * frames {
        bytes
            .chunks_exact(plane)
            .take(frames)
            .map(<[u8]>::to_vec)
            .collect()
    } else {
        return Err(Error::DisparitySize {
            path: path.to_path_buf(),
            width,
            height,
            expected: (plane * frames) as u64,
            actual: bytes.len() as u64,
        });
    };
    let mut maps = Vec::with_capacity(frames);
    for i in 0..frames {
        let data = &planes[i.min(planes.len() - 1)];
        maps.push(DisparityMap::from_values(
            width,
            height,
            data.iter().map(|&b| b as i32).collect(),
            scale,
        )?);
    }
    Ok(maps)
}

/// File locations for one side (reference or distorted) of a dataset entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewPaths {
    pub left: PathBuf,
    pub right: PathBuf,
    pub disp_l2r: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disp_r2l: Option<PathBuf>,
}

/// One reference/distorted pair in a dataset manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    #[serde(rename = "ref")]
    pub reference: ViewPaths,
    pub dist: ViewPaths,
    pub distortion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mos: Option<f64>,
    pub width: usize,
    pub height: usize,
    pub fps: f64,
}

/// Dataset manifest: an ordered list of scoring entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

fn check_yuv_file(path: &Path, width: usize, height: usize) -> Result<()> {
    let meta = std::fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let frame_bytes = yuv_frame_bytes(width, height);
    let actual = meta.len();
    if actual == 0 || actual % frame_bytes != 0 {
        return Err(Error::TruncatedYuv {
            path: path.to_path_buf(),
            width,
            height,
            frame_bytes,
            actual,
            expected: (actual / frame_bytes + 1) * frame_bytes,
        });
    }
    Ok(())
}

fn check_disparity_file(path: &Path, width: usize, height: usize) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        parse_pgm(path, &bytes).map(|_| ())
    } else if !bytes.is_empty() && bytes.len() % (width * height) == 0 {
        Ok(())
    } else {
        Err(Error::DisparitySize {
            path: path.to_path_buf(),
            width,
            height,
            expected: (width * height) as u64,
            actual: bytes.len() as u64,
        })
    }
}

/// Loads and validates a manifest: paths are resolved relative to the
/// manifest's directory, ids must be unique, MOS must lie in [0, 10], and
/// every referenced file must exist and parse shallowly.
pub fn load_dataset_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::manifest(path, format!("invalid json: {e}")))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut seen = std::collections::HashSet::new();
    for entry in &mut manifest.entries {
        if !seen.insert(entry.id.clone()) {
            return Err(Error::manifest(
                path,
                format!("duplicate id '{}'", entry.id),
            ));
        }
        if let Some(mos) = entry.mos {
            if !(0.0..=10.0).contains(&mos) {
                return Err(Error::manifest(
                    path,
                    format!("entry '{}': mos {mos} outside [0, 10]", entry.id),
                ));
            }
        }
        if entry.width % 2 != 0 || entry.height % 2 != 0 {
            return Err(Error::manifest(
                path,
                format!(
                    "entry '{}': odd dimensions {}x{}",
                    entry.id, entry.width, entry.height
                ),
            ));
        }
        for side in [&mut entry.reference, &mut entry.dist] {
            for path_field in [&mut side.left, &mut side.right, &mut side.disp_l2r] {
                *path_field = base.join(&*path_field);
            }
            if let Some(r2l) = &mut side.disp_r2l {
                *r2l = base.join(&*r2l);
            }
            check_yuv_file(&side.left, entry.width, entry.height)?;
            check_yuv_file(&side.right, entry.width, entry.height)?;
            check_disparity_file(&side.disp_l2r, entry.width, entry.height)?;
            if let Some(r2l) = &side.disp_r2l {
                check_disparity_file(r2l, entry.width, entry.height)?;
            }
        }
    }
    Ok(manifest)
}

/// Loads the reference and distorted stereo sequences of one manifest entry.
///
/// Disparity values read from files are taken at scale 1.0 (one stored unit
/// per pixel); `max_frames` caps the frames read from every file.
pub fn load_entry(
    entry: &ManifestEntry,
    max_frames: Option<usize>,
) -> Result<(StereoSequence, StereoSequence)> {
    let load_side = |side: &ViewPaths, other_len: Option<usize>| -> Result<StereoSequence> {
        let left = load_yuv_sequence(&side.left, entry.width, entry.height, entry.fps, max_frames)?;
        let right = load_yuv_sequence(
            &side.right,
            entry.width,
            entry.height,
            entry.fps,
            max_frames,
        )?;
        if let Some(n) = other_len {
            if left.len() != n {
                return Err(Error::dimension(format!(
                    "entry '{}': reference has {n} frames, distorted has {}",
                    entry.id,
                    left.len()
                )));
            }
        }
        let n = left.len();
        let l2r = load_disparity_maps(&side.disp_l2r, entry.width, entry.height, 1.0, n)?;
        let r2l = side
            .disp_r2l
            .as_ref()
            .map(|p| load_disparity_maps(p, entry.width, entry.height, 1.0, n))
            .transpose()?;
        StereoSequence::new(left, right, l2r, r2l)
    };
    let reference = load_side(&entry.reference, None)?;
    let distorted = load_side(&entry.dist, Some(reference.len()))?;
    Ok((reference, distorted))
}
