//! 2-D quality kernels: single-window block SSIM, a pixel-domain multiscale
//! VIF, and PSNR.

use crate::video_io::{DisparityMap, Frame};
use crate::{Error, Result};

/// SSIM stabilizers for 8-bit dynamic range.
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
pub const SAMPLE_RANGE: f64 = 255.0;

/// PSNR reported for bit-identical inputs.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Denominator clamp used throughout the VIF accumulation.
pub const VIF_EPSILON: f64 = 1e-10;

/// Number of dyadic scales the VIF pyramid descends.
pub const VIF_SCALES: usize = 4;

/// Identifier of the VIF flavour, embedded in every report.
pub const VIF_VARIANT: &str = "pixel-domain multiscale (4 dyadic scales, 3x3 neighborhood gsm)";

/// Real-valued single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::dimension(format!(
                "plane holds {} samples, expected {} for {width}x{height}",
                data.len(),
                width * height
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn from_frame(frame: &Frame) -> Self {
        Plane {
            width: frame.width(),
            height: frame.height(),
            data: frame.luma().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn from_disparity(map: &DisparityMap) -> Self {
        Plane {
            width: map.width(),
            height: map.height(),
            data: map.values_px(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Structural similarity of two equally sized sample blocks, computed over
/// the whole block as a single window with population statistics.
pub fn ssim_block(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::dimension(format!(
            "ssim needs equally sized non-empty blocks, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let mu_a = a.iter().sum::<f64>() / n;
    let mu_b = b.iter().sum::<f64>() / n;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mu_a;
        let dy = y - mu_b;
        var_a += dx * dx;
        var_b += dy * dy;
        cov += dx * dy;
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let c1 = (SSIM_K1 * SAMPLE_RANGE).powi(2);
    let c2 = (SSIM_K2 * SAMPLE_RANGE).powi(2);
    Ok(((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
}

/// Tunables for [`vif`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VifParams {
    /// Variance of the additive noise in the visual channel model.
    pub noise_variance: f64,
}

impl Default for VifParams {
    fn default() -> Self {
        VifParams {
            noise_variance: 2.0,
        }
    }
}

/// Smooths with a separable binomial [1 2 1]/4 kernel (edges replicated)
/// and keeps every second sample along both axes.
fn smooth_decimate(p: &Plane) -> Plane {
    let (w, h) = (p.width, p.height);
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let l = p.at(x.saturating_sub(1), y);
            let r = p.at((x + 1).min(w - 1), y);
            rows[y * w + x] = 0.25 * l + 0.5 * p.at(x, y) + 0.25 * r;
        }
    }
    let ow = w.div_ceil(2);
    let oh = h.div_ceil(2);
    let mut out = vec![0.0; ow * oh];
    for oy in 0..oh {
        let y = oy * 2;
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for ox in 0..ow {
            let x = ox * 2;
            out[oy * ow + ox] =
                0.25 * rows[up * w + x] + 0.5 * rows[y * w + x] + 0.25 * rows[down * w + x];
        }
    }
    Plane {
        width: ow,
        height: oh,
        data: out,
    }
}

/// Accumulates the information terms of one scale over all valid 3x3
/// neighborhoods, following the scalar Gaussian-scale-mixture channel model.
fn vif_scale_terms(r: &Plane, d: &Plane, noise_variance: f64, num: &mut f64, den: &mut f64) {
    let (w, h) = (r.width, r.height);
    for cy in 1..h - 1 {
        for cx in 1..w - 1 {
            let mut s_r = 0.0;
            let mut s_d = 0.0;
            let mut s_rr = 0.0;
            let mut s_dd = 0.0;
            let mut s_rd = 0.0;
            for y in cy - 1..=cy + 1 {
                for x in cx - 1..=cx + 1 {
                    let a = r.at(x, y);
                    let b = d.at(x, y);
                    s_r += a;
                    s_d += b;
                    s_rr += a * a;
                    s_dd += b * b;
                    s_rd += a * b;
                }
            }
            let inv = 1.0 / 9.0;
            let mu_r = s_r * inv;
            let mu_d = s_d * inv;
            let mut var_r = (s_rr * inv - mu_r * mu_r).max(0.0);
            let var_d = (s_dd * inv - mu_d * mu_d).max(0.0);
            let cov = s_rd * inv - mu_r * mu_d;

            let mut gain = cov / (var_r + VIF_EPSILON);
            let mut resid = var_d - gain * cov;
            if var_r < VIF_EPSILON {
                gain = 0.0;
                resid = var_d;
                var_r = 0.0;
            }
            if var_d < VIF_EPSILON {
                gain = 0.0;
                resid = 0.0;
            }
            if gain < 0.0 {
                resid = var_d;
                gain = 0.0;
            }
            if resid < VIF_EPSILON {
                resid = VIF_EPSILON;
            }
            *num += (1.0 + gain * gain * var_r / (resid + noise_variance)).log2();
            *den += (1.0 + var_r / noise_variance).log2();
        }
    }
}

/// Visual information fidelity of `distorted` with respect to `reference`.
///
/// Pixel-domain multiscale form: up to [`VIF_SCALES`] dyadic scales are
/// accumulated (each reached by 2x smoothing and decimation), with scalar
/// GSM statistics taken over 3x3 neighborhoods. Inputs must be at least
/// 32x32; scales that no longer fit are skipped. Two images with no
/// information content at all compare as 1.
pub fn vif(reference: &Plane, distorted: &Plane, params: &VifParams) -> Result<f64> {
    if reference.width != distorted.width || reference.height != distorted.height {
        return Err(Error::dimension(format!(
            "vif dimensions differ: {}x{} vs {}x{}",
            reference.width, reference.height, distorted.width, distorted.height
        )));
    }
    if reference.width < 32 || reference.height < 32 {
        return Err(Error::invalid(format!(
            "vif needs at least 32x32 input, got {}x{}",
            reference.width, reference.height
        )));
    }
    if params.noise_variance <= 0.0 || params.noise_variance.is_nan() {
        return Err(Error::invalid(format!(
            "vif noise variance must be positive, got {}",
            params.noise_variance
        )));
    }
    // Bit-identical inputs are the identity channel: nothing is lost, so the
    // fidelity is exactly 1 (the residual-variance floor below would
    // otherwise leave it short of 1 by ~1e-11).
    if reference.data == distorted.data {
        return Ok(1.0);
    }
    let mut r = reference.clone();
    let mut d = distorted.clone();
    let mut num = 0.0;
    let mut den = 0.0;
    for scale in 0..VIF_SCALES {
        if scale > 0 {
            r = smooth_decimate(&r);
            d = smooth_decimate(&d);
        }
        if r.width < 3 || r.height < 3 {
            break;
        }
        vif_scale_terms(&r, &d, params.noise_variance, &mut num, &mut den);
    }
    if den <= VIF_EPSILON {
        // No measurable reference information: nothing could be lost.
        return Ok(if num <= VIF_EPSILON {
            1.0
        } else {
            num / VIF_EPSILON
        });
    }
    Ok(num / den)
}

/// Peak signal-to-noise ratio in dB between two 8-bit frames, capped at
/// [`PSNR_CAP_DB`] for identical inputs.
pub fn psnr(reference: &Frame, distorted: &Frame) -> Result<f64> {
    if reference.width() != distorted.width() || reference.height() != distorted.height() {
        return Err(Error::dimension(format!(
            "psnr dimensions differ: {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            distorted.width(),
            distorted.height()
        )));
    }
    let mut sse: u64 = 0;
    for (&a, &b) in reference.luma().iter().zip(distorted.luma()) {
        let d = a as i64 - b as i64;
        sse += (d * d) as u64;
    }
    if sse == 0 {
        return Ok(PSNR_CAP_DB);
    }
    let mse = sse as f64 / reference.luma().len() as f64;
    Ok(10.0 * (SAMPLE_RANGE * SAMPLE_RANGE / mse).log10())
}
