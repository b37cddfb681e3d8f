//! Temporal pooling of per-frame quality scores: an exponentially weighted
//! Minkowski mean that can emphasize the most recent frames.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Whether the recency weights enter the sum as written or scaled to mean 1.
///
/// Normalized is the default: it makes constant sequences exact fixed points
/// of the pooling, which keeps identity comparisons clean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Normalized,
    Literal,
}

/// Direction of the exponential recency weighting.
///
/// `TowardLast` (default) gives the final frame weight 1 with earlier frames
/// decaying, matching the recency effect in subjective scoring. `AsPrinted`
/// flips the sign so earlier frames weigh more; it is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecencySign {
    #[default]
    TowardLast,
    AsPrinted,
}

impl RecencySign {
    fn factor(self) -> f64 {
        match self {
            RecencySign::TowardLast => 1.0,
            RecencySign::AsPrinted => -1.0,
        }
    }
}

/// Minkowski exponent, decay constant, and weighting flavor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingParams {
    /// Minkowski exponent p (>= 1). Larger p leans on extreme frames.
    pub p: f64,
    /// Decay constant tau in frames (> 0).
    pub tau: f64,
    pub weight_mode: WeightMode,
    pub recency_sign: RecencySign,
}

impl Default for PoolingParams {
    fn default() -> Self {
        PoolingParams {
            p: 9.0,
            tau: 100.0,
            weight_mode: WeightMode::default(),
            recency_sign: RecencySign::default(),
        }
    }
}

impl PoolingParams {
    pub fn validate(&self) -> Result<()> {
        if self.p < 1.0 || self.p.is_nan() {
            return Err(Error::invalid(format!(
                "pooling exponent must be >= 1, got {}",
                self.p
            )));
        }
        if self.tau <= 0.0 || self.tau.is_nan() {
            return Err(Error::invalid(format!(
                "pooling tau must be positive, got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// Exponential recency weights for `n` frames: w_i = exp(s * (i - n) / tau)
/// with 1-based i, so the final frame always carries weight exp(0) = 1.
pub fn recency_weights(n: usize, tau: f64, sign: RecencySign) -> Vec<f64> {
    let s = sign.factor();
    (1..=n)
        .map(|i| (s * (i as f64 - n as f64) / tau).exp())
        .collect()
}

/// Pools per-frame scores into one value:
/// `[(1/n) * sum(score_i^p * w_i)]^(1/p)`.
///
/// In normalized mode the weights are first divided by their mean, and a
/// sequence of identical scores returns that score exactly.
pub fn minkowski_pool(scores: &[f64], params: &PoolingParams) -> Result<f64> {
    params.validate()?;
    if scores.is_empty() {
        return Err(Error::invalid("cannot pool an empty score list"));
    }
    for &s in scores {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!(
                "scores must be finite and >= 0, got {s}"
            )));
        }
    }
    if params.weight_mode == WeightMode::Normalized && scores.windows(2).all(|w| w[0] == w[1]) {
        return Ok(scores[0]);
    }
    let mut weights = recency_weights(scores.len(), params.tau, params.recency_sign);
    if params.weight_mode == WeightMode::Normalized {
        let mean = weights.iter().sum::<f64>() / weights.len() as f64;
        for w in &mut weights {
            *w /= mean;
        }
    }
    let n = scores.len() as f64;
    let acc: f64 = scores
        .iter()
        .zip(&weights)
        .map(|(&s, &w)| s.powf(params.p) * w)
        .sum();
    Ok((acc / n).powf(1.0 / params.p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(p: f64, tau: f64, mode: WeightMode, sign: RecencySign) -> PoolingParams {
        PoolingParams {
            p,
            tau,
            weight_mode: mode,
            recency_sign: sign,
        }
    }

    #[test]
    fn weights_peak_at_the_final_frame_toward_last() {
        let w = recency_weights(5, 10.0, RecencySign::TowardLast);
        assert_eq!(w.len(), 5);
        assert_eq!(w[4], 1.0);
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        assert_relative_eq!(w[3], (-0.1f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn as_printed_reverses_the_decay() {
        let w = recency_weights(5, 10.0, RecencySign::AsPrinted);
        assert_eq!(w[4], 1.0);
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        let fwd = recency_weights(5, 10.0, RecencySign::TowardLast);
        for (a, b) in w.iter().zip(fwd.iter().rev()) {
            // Mirrored geometric ladders, shifted so each ends at 1.
            assert_relative_eq!(a / w[0], b / fwd[4], epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_sequences_are_exact_fixed_points_in_normalized_mode() {
        let p = params(9.0, 100.0, WeightMode::Normalized, RecencySign::TowardLast);
        let scores = vec![0.7321; 137];
        let pooled = minkowski_pool(&scores, &p).unwrap();
        assert_eq!(pooled, 0.7321);
    }

    #[test]
    fn literal_mode_shrinks_constants_by_the_weight_mean() {
        let p = params(2.0, 10.0, WeightMode::Literal, RecencySign::TowardLast);
        let scores = vec![1.0; 20];
        let pooled = minkowski_pool(&scores, &p).unwrap();
        let mean_w = recency_weights(20, 10.0, RecencySign::TowardLast)
            .iter()
            .sum::<f64>()
            / 20.0;
        assert_relative_eq!(pooled, mean_w.powf(0.5), epsilon = 1e-12);
        assert!(pooled < 1.0);
    }

    #[test]
    fn single_frame_passes_through_in_both_modes() {
        for mode in [WeightMode::Normalized, WeightMode::Literal] {
            let p = params(9.0, 100.0, mode, RecencySign::TowardLast);
            let pooled = minkowski_pool(&[0.42], &p).unwrap();
            assert_relative_eq!(pooled, 0.42, epsilon = 1e-15);
        }
    }

    #[test]
    fn matches_a_direct_summation_oracle() {
        // 99 good frames followed by one bad frame; evaluate the closed
        // formula with nothing shared with the implementation.
        let mut scores: Vec<f64> = vec![0.9; 99];
        scores.push(0.1);
        let (p, tau, n) = (9.0, 100.0, 100usize);
        let raw: Vec<f64> = (1..=n)
            .map(|i| ((i as f64 - n as f64) / tau).exp())
            .collect();
        let mean_w = raw.iter().sum::<f64>() / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            acc += scores[i].powi(9) * raw[i] / mean_w;
        }
        let expected = (acc / n as f64).powf(1.0 / p);

        let pooled = minkowski_pool(
            &scores,
            &params(p, tau, WeightMode::Normalized, RecencySign::TowardLast),
        )
        .unwrap();
        assert!(
            (pooled - expected).abs() <= 1e-12,
            "pooled {pooled} vs oracle {expected}"
        );
    }

    #[test]
    fn a_late_bad_frame_pools_lower_than_an_early_one() {
        let p = params(9.0, 100.0, WeightMode::Normalized, RecencySign::TowardLast);
        let mut min_last = vec![0.9; 99];
        min_last.push(0.1);
        let mut min_first = vec![0.1];
        min_first.extend(vec![0.9; 99]);
        let late = minkowski_pool(&min_last, &p).unwrap();
        let early = minkowski_pool(&min_first, &p).unwrap();
        assert!(
            late < early,
            "late bad frame should weigh more: {late} vs {early}"
        );

        // The printed sign flips the emphasis.
        let p_rev = params(9.0, 100.0, WeightMode::Normalized, RecencySign::AsPrinted);
        let late_rev = minkowski_pool(&min_last, &p_rev).unwrap();
        let early_rev = minkowski_pool(&min_first, &p_rev).unwrap();
        assert!(late_rev > early_rev);
    }

    #[test]
    fn pooling_is_scale_equivariant() {
        let scores = [0.3, 0.8, 0.55, 0.91, 0.2];
        for mode in [WeightMode::Normalized, WeightMode::Literal] {
            let p = params(9.0, 50.0, mode, RecencySign::TowardLast);
            let base = minkowski_pool(&scores, &p).unwrap();
            let scaled: Vec<f64> = scores.iter().map(|s| s * 2.5).collect();
            let pooled = minkowski_pool(&scaled, &p).unwrap();
            assert_relative_eq!(pooled, 2.5 * base, epsilon = 1e-12);
        }
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let good = PoolingParams::default();
        assert!(minkowski_pool(&[], &good).is_err());
        assert!(minkowski_pool(&[0.5, -0.1], &good).is_err());
        assert!(minkowski_pool(&[0.5, f64::NAN], &good).is_err());
        let bad_p = params(0.5, 100.0, WeightMode::Normalized, RecencySign::TowardLast);
        assert!(minkowski_pool(&[0.5], &bad_p).is_err());
        let bad_tau = params(9.0, 0.0, WeightMode::Normalized, RecencySign::TowardLast);
        assert!(minkowski_pool(&[0.5], &bad_tau).is_err());
    }
}
