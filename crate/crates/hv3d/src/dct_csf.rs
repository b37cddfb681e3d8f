//! Orthonormal DCT kernels, two-view DCT fusion, and the contrast
//! sensitivity weighting mask applied to fused coefficient blocks.

use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::{Arc, RwLock};

use crate::{Error, Result};

/// Square block of 2-D DCT coefficients, row-major, side `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffBlock {
    side: usize,
    coeffs: Vec<f64>,
}

impl CoeffBlock {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient at frequency index (u, v) = (row, column).
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.coeffs[u * self.side + v]
    }
}

/// Contrast sensitivity weights for an `m`x`m` coefficient block,
/// normalized to mean one so the mask redistributes rather than scales
/// block energy.
#[derive(Debug, Clone)]
pub struct CsfMask {
    side: usize,
    weights: Vec<f64>,
}

impl CsfMask {
    /// Builds the mask for block side `m`.
    ///
    /// Weights are inversely proportional to the baseline JPEG luminance
    /// quantization steps: frequencies the eye resolves well (coarsely
    /// quantized nowhere, i.e. small steps) receive large weights. For
    /// `m != 8` the 8x8 weight table is resampled bicubically and then
    /// renormalized to mean one.
    pub fn new(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!(
                "csf mask side must be >= 2, got {m}"
            )));
        }
        let base: Vec<f64> = JPEG_LUMA_QUANT.iter().flatten().map(|&q| 1.0 / q).collect();
        let weights = if m == 8 {
            normalize_mean_one(base)
        } else {
            normalize_mean_one(resample_bicubic(&base, 8, m))
        };
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::degenerate(format!(
                "csf mask for side {m} produced a non-positive weight"
            )));
        }
        Ok(CsfMask { side: m, weights })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at frequency index (u, v).
    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.weights[u * self.side + v]
    }
}

/// Baseline JPEG luminance quantization steps (8x8).
#[rustfmt::skip]
const JPEG_LUMA_QUANT: [[f64; 8]; 8] = [
    [16.0, 11.0, 10.0, 16.0,  24.0,  40.0,  51.0,  61.0],
    [12.0, 12.0, 14.0, 19.0,  26.0,  58.0,  60.0,  55.0],
    [14.0, 13.0, 16.0, 24.0,  40.0,  57.0,  69.0,  56.0],
    [14.0, 17.0, 22.0, 29.0,  51.0,  87.0,  80.0,  62.0],
    [18.0, 22.0, 37.0, 56.0,  68.0, 109.0, 103.0,  77.0],
    [24.0, 35.0, 55.0, 64.0,  81.0, 104.0, 113.0,  92.0],
    [49.0, 64.0, 78.0, 87.0, 103.0, 121.0, 120.0, 101.0],
    [72.0, 92.0, 95.0, 98.0, 112.0, 100.0, 103.0,  99.0],
];

fn normalize_mean_one(mut values: Vec<f64>) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v /= mean;
    }
    values
}

/// Catmull-Rom interpolation of a `src`x`src` grid to `dst`x`dst`,
/// sampling with endpoints aligned and edge rows/columns clamped.
fn resample_bicubic(grid: &[f64], src: usize, dst: usize) -> Vec<f64> {
    let sample = |r: isize, c: isize| -> f64 {
        let r = r.clamp(0, src as isize - 1) as usize;
        let c = c.clamp(0, src as isize - 1) as usize;
        grid[r * src + c]
    };
    let cubic = |p0: f64, p1: f64, p2: f64, p3: f64, t: f64| -> f64 {
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
    };
    let step = (src - 1) as f64 / (dst - 1) as f64;
    let mut out = Vec::with_capacity(dst * dst);
    for i in 0..dst {
        let y = i as f64 * step;
        let y0 = y.floor() as isize;
        let ty = y - y0 as f64;
        for j in 0..dst {
            let x = j as f64 * step;
            let x0 = x.floor() as isize;
            let tx = x - x0 as f64;
            let mut rows = [0.0; 4];
            for (k, row) in rows.iter_mut().enumerate() {
                let r = y0 - 1 + k as isize;
                *row = cubic(
                    sample(r, x0 - 1),
                    sample(r, x0),
                    sample(r, x0 + 1),
                    sample(r, x0 + 2),
                    tx,
                );
            }
            out.push(cubic(rows[0], rows[1], rows[2], rows[3], ty));
        }
    }
    out
}

/// Cached orthonormal DCT-II basis: `basis[u * m + x] = c(u) cos(pi (2x+1) u / 2m)`
/// with `c(0) = sqrt(1/m)` and `c(u>0) = sqrt(2/m)`.
fn basis(m: usize) -> Arc<Vec<f64>> {
    static CACHE: RwLock<Option<HashMap<usize, Arc<Vec<f64>>>>> = RwLock::new(None);
    if let Some(map) = CACHE.read().unwrap().as_ref() {
        if let Some(b) = map.get(&m) {
            return Arc::clone(b);
        }
    }
    let mut table = vec![0.0; m * m];
    let norm0 = (1.0 / m as f64).sqrt();
    let norm = (2.0 / m as f64).sqrt();
    for u in 0..m {
        let c = if u == 0 { norm0 } else { norm };
        for x in 0..m {
            table[u * m + x] = c * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * m as f64)).cos();
        }
    }
    let entry = Arc::new(table);
    CACHE
        .write()
        .unwrap()
        .get_or_insert_with(HashMap::new)
        .insert(m, Arc::clone(&entry));
    entry
}

fn check_block(samples: &[f64], m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::invalid(format!("block side must be >= 2, got {m}")));
    }
    if samples.len() != m * m {
        return Err(Error::dimension(format!(
            "expected {} samples for a {m}x{m} block, got {}",
            m * m,
            samples.len()
        )));
    }
    Ok(())
}

/// Forward orthonormal 2-D DCT of a row-major `m`x`m` sample block.
pub fn dct2(samples: &[f64], m: usize) -> Result<CoeffBlock> {
    check_block(samples, m)?;
    let t = basis(m);
    // X = T * B * T^t, with the intermediate product kept row-major.
    let mut tmp = vec![0.0; m * m];
    for u in 0..m {
        for y in 0..m {
            let mut acc = 0.0;
            for x in 0..m {
                acc += t[u * m + x] * samples[x * m + y];
            }
            tmp[u * m + y] = acc;
        }
    }
    let mut coeffs = vec![0.0; m * m];
    for u in 0..m {
        for v in 0..m {
            let mut acc = 0.0;
            for y in 0..m {
                acc += tmp[u * m + y] * t[v * m + y];
            }
            coeffs[u * m + v] = acc;
        }
    }
    Ok(CoeffBlock { side: m, coeffs })
}

/// Inverse of [`dct2`]; returns the row-major sample block.
pub fn idct2(block: &CoeffBlock) -> Vec<f64> {
    let m = block.side;
    let t = basis(m);
    // B = T^t * X * T.
    let mut tmp = vec![0.0; m * m];
    for x in 0..m {
        for v in 0..m {
            let mut acc = 0.0;
            for u in 0..m {
                acc += t[u * m + x] * block.coeffs[u * m + v];
            }
            tmp[x * m + v] = acc;
        }
    }
    let mut samples = vec![0.0; m * m];
    for x in 0..m {
        for y in 0..m {
            let mut acc = 0.0;
            for v in 0..m {
                acc += tmp[x * m + v] * t[v * m + y];
            }
            samples[x * m + y] = acc;
        }
    }
    samples
}

/// Fuses a matched pair of view blocks into one cyclopean coefficient block.
///
/// The pair is treated as an `m`x`m`x2 tensor under a separable orthonormal
/// 3-D DCT; only the low-frequency slice along the view axis is kept, which
/// reduces to `(dct2(left) + dct2(right)) / sqrt(2)`.
pub fn fuse_blocks_3d_dct(left: &[f64], right: &[f64], m: usize) -> Result<CoeffBlock> {
    check_block(left, m)?;
    check_block(right, m)?;
    let l = dct2(left, m)?;
    let r = dct2(right, m)?;
    let coeffs = l
        .coeffs
        .iter()
        .zip(&r.coeffs)
        .map(|(a, b)| (a + b) * FRAC_1_SQRT_2)
        .collect();
    Ok(CoeffBlock { side: m, coeffs })
}

/// Applies the contrast sensitivity mask element-wise.
pub fn apply_csf(block: &CoeffBlock, mask: &CsfMask) -> Result<CoeffBlock> {
    if block.side != mask.side {
        return Err(Error::dimension(format!(
            "coefficient block side {} does not match mask side {}",
            block.side, mask.side
        )));
    }
    let coeffs = block
        .coeffs
        .iter()
        .zip(&mask.weights)
        .map(|(c, w)| c * w)
        .collect();
    Ok(CoeffBlock {
        side: block.side,
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force separable 3-D DCT over an mxmx2 tensor, depth-slice `w`.
    /// Written as literal cosine sums, independent of the production path.
    fn brute_force_3d_dct_slice(left: &[f64], right: &[f64], m: usize, w: usize) -> Vec<f64> {
        let mf = m as f64;
        let c = |i: usize, n: f64| -> f64 {
            if i == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            }
        };
        let mut out = vec![0.0; m * m];
        for u in 0..m {
            for v in 0..m {
                let mut acc = 0.0;
                for x in 0..m {
                    for y in 0..m {
                        for (z, plane) in [left, right].iter().enumerate() {
                            acc += plane[x * m + y]
                                * (PI * (2 * x + 1) as f64 * u as f64 / (2.0 * mf)).cos()
                                * (PI * (2 * y + 1) as f64 * v as f64 / (2.0 * mf)).cos()
                                * (PI * (2 * z + 1) as f64 * w as f64 / 4.0).cos();
                        }
                    }
                }
                out[u * m + v] = acc * c(u, mf) * c(v, mf) * c(w, 2.0);
            }
        }
        out
    }

    fn random_block(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
        (0..m * m).map(|_| rng.gen_range(-128.0..128.0)).collect()
    }

    #[test]
    fn dct2_of_constant_block_concentrates_in_dc() {
        let m = 8;
        let v = 7.25;
        let block = vec![v; m * m];
        let out = dct2(&block, m).unwrap();
        assert!((out.at(0, 0) - m as f64 * v).abs() < 1e-12);
        for (i, &c) in out.coeffs().iter().enumerate() {
            if i != 0 {
                assert!(c.abs() < 1e-12, "ac coefficient {i} = {c}");
            }
        }
    }

    #[test]
    fn dct2_two_by_two_impulse_spreads_evenly() {
        let out = dct2(&[1.0, 0.0, 0.0, 0.0], 2).unwrap();
        for &c in out.coeffs() {
            assert!((c - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn idct2_of_dc_only_block_is_constant() {
        let m = 8;
        let dc = 36.0;
        let mut coeffs = vec![0.0; m * m];
        coeffs[0] = dc;
        let samples = idct2(&CoeffBlock { side: m, coeffs });
        for &s in &samples {
            assert!((s - dc / m as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn dct2_idct2_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &m in &[2usize, 4, 8, 16] {
            let block = random_block(&mut rng, m);
            let back = idct2(&dct2(&block, m).unwrap());
            for (a, b) in block.iter().zip(&back) {
                assert!((a - b).abs() < 1e-6, "round trip at side {m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn dct2_preserves_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let block = random_block(&mut rng, 8);
        let out = dct2(&block, 8).unwrap();
        let e_spatial: f64 = block.iter().map(|v| v * v).sum();
        let e_freq: f64 = out.coeffs().iter().map(|v| v * v).sum();
        assert!((e_spatial - e_freq).abs() / e_spatial < 1e-9);
    }

    #[test]
    fn fusion_matches_brute_force_3d_dct_low_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for &m in &[4usize, 8] {
            let left = random_block(&mut rng, m);
            let right = random_block(&mut rng, m);
            let fused = fuse_blocks_3d_dct(&left, &right, m).unwrap();
            let oracle = brute_force_3d_dct_slice(&left, &right, m, 0);
            for (a, b) in fused.coeffs().iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-6, "side {m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fusing_identical_blocks_scales_by_sqrt_two() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let block = random_block(&mut rng, 8);
        let fused = fuse_blocks_3d_dct(&block, &block, 8).unwrap();
        let single = dct2(&block, 8).unwrap();
        for (f, s) in fused.coeffs().iter().zip(single.coeffs()) {
            assert!((f - s * 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn fusing_opposite_blocks_cancels_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let left = random_block(&mut rng, 8);
        let right: Vec<f64> = left.iter().map(|v| -v).collect();
        let fused = fuse_blocks_3d_dct(&left, &right, 8).unwrap();
        for &c in fused.coeffs() {
            assert_eq!(c, 0.0);
        }
    }

    #[test]
    fn fusion_is_linear_in_scale() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let left = random_block(&mut rng, 8);
        let right = random_block(&mut rng, 8);
        let scaled_l: Vec<f64> = left.iter().map(|v| v * 3.5).collect();
        let scaled_r: Vec<f64> = right.iter().map(|v| v * 3.5).collect();
        let base = fuse_blocks_3d_dct(&left, &right, 8).unwrap();
        let scaled = fuse_blocks_3d_dct(&scaled_l, &scaled_r, 8).unwrap();
        for (s, b) in scaled.coeffs().iter().zip(base.coeffs()) {
            assert!((s - b * 3.5).abs() < 1e-9);
        }
    }

    #[test]
    fn csf_mask_has_mean_one_and_expected_corner_ratio() {
        let mask = CsfMask::new(8).unwrap();
        let mean = mask.weights().iter().sum::<f64>() / 64.0;
        assert!((mean - 1.0).abs() < 1e-9);
        // Lowest frequency over highest: quant steps 16 and 99.
        assert!((mask.at(0, 0) / mask.at(7, 7) - 99.0 / 16.0).abs() < 1e-9);
    }

    #[test]
    fn csf_mask_resamples_to_other_sides() {
        for &m in &[4usize, 16, 32] {
            let mask = CsfMask::new(m).unwrap();
            let mean = mask.weights().iter().sum::<f64>() / (m * m) as f64;
            assert!((mean - 1.0).abs() < 1e-9, "mean at side {m} = {mean}");
            assert!(mask.weights().iter().all(|&w| w > 0.0));
            // Endpoint-aligned resampling pins the corners to the source
            // corners, so their ratio survives any renormalization.
            let ratio = mask.at(0, 0) / mask.at(m - 1, m - 1);
            assert!(
                (ratio - 99.0 / 16.0).abs() < 1e-9,
                "corner ratio at side {m} = {ratio}"
            );
            // The heaviest weight stays in the low-frequency quadrant
            // (the source table bottoms out at step 10 near the origin).
            let (argmax, _) = mask
                .weights()
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap();
            let (u, v) = (argmax % m, argmax / m);
            assert!(u < m / 2 && v < m / 2, "max at ({u}, {v}) for side {m}");
        }
    }

    #[test]
    fn apply_csf_multiplies_elementwise() {
        let mask = CsfMask::new(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let block = dct2(&random_block(&mut rng, 8), 8).unwrap();
        let weighted = apply_csf(&block, &mask).unwrap();
        for u in 0..8 {
            for v in 0..8 {
                let expect = block.at(u, v) * mask.at(u, v);
                assert!((weighted.at(u, v) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(dct2(&[1.0; 4], 1).is_err());
        assert!(dct2(&[1.0; 5], 2).is_err());
        assert!(CsfMask::new(1).is_err());
        let block = dct2(&[1.0; 4], 2).unwrap();
        let mask = CsfMask::new(8).unwrap();
        assert!(apply_csf(&block, &mask).is_err());
    }
}
