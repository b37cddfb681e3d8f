//! Agreement between objective scores and subjective ratings: logistic
//! mapping, Pearson/Spearman correlation, RMSE, and an outlier rate.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Plain-language statement of the outlier rule, embedded in reports so
/// numbers stay self-describing.
pub const OUTLIER_RULE: &str =
    "outlier: |mapped - mos| > 2 * population stddev of residuals after logistic mapping";

const SIMPLEX_TOLERANCE: f64 = 1e-10;
const MAX_FIT_ITERATIONS: usize = 2000;

/// One scored sequence paired with its subjective rating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub distortion: String,
    pub metric_score: f64,
    pub mos: f64,
}

/// Fitted mapping y = a / (1 + e^(-b(x - c))) from metric scores to ratings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticCurve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl LogisticCurve {
    pub fn evaluate(&self, x: f64) -> f64 {
        self.a * sigmoid(self.b * (x - self.c))
    }
}

/// Numerically stable standard sigmoid.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Degenerate-input markers carried alongside the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AgreementFlags {
    /// Too few points or a constant metric: scores were compared unmapped.
    pub identity_mapping: bool,
    /// All metric scores identical; correlations are reported as 0.
    pub constant_metric: bool,
    /// All ratings identical; correlations are reported as 0.
    pub constant_mos: bool,
}

/// Correlation statistics between (mapped) metric scores and ratings.
///
/// Correlations that are undefined because one side has zero variance are
/// reported as 0 with the matching flag set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub curve: Option<LogisticCurve>,
    pub pcc: f64,
    pub scc: f64,
    pub rmse: f64,
    pub outlier_ratio: f64,
    pub flags: AgreementFlags,
}

fn check_finite(name: &str, values: &[f64]) -> Result<()> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "{name} contains non-finite value {v}"
        )));
    }
    Ok(())
}

fn all_equal(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Pearson correlation coefficient; errors when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::dimension(format!(
            "correlation inputs differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return Err(Error::degenerate(
            "correlation undefined for a zero-variance input",
        ));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average-rank tie handling.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Fraction of residuals whose magnitude exceeds twice their population
/// standard deviation.
pub fn outlier_ratio(residuals: &[f64]) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    let m = mean(residuals);
    let var = residuals.iter().map(|r| (r - m) * (r - m)).sum::<f64>() / residuals.len() as f64;
    let bound = 2.0 * var.sqrt();
    let outliers = residuals.iter().filter(|r| r.abs() > bound).count();
    outliers as f64 / residuals.len() as f64
}

/// Sum of squared residuals of the curve against (x, y).
fn fit_cost(params: &[f64; 3], x: &[f64], y: &[f64]) -> f64 {
    let curve = LogisticCurve {
        a: params[0],
        b: params[1],
        c: params[2],
    };
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let r = curve.evaluate(xi) - yi;
            r * r
        })
        .sum()
}

/// Derivative-free simplex descent (reflection 1, expansion 2, contraction
/// 0.5, shrink 0.5) from a deterministic start; stops when the simplex
/// diameter falls below `SIMPLEX_TOLERANCE` or after `MAX_FIT_ITERATIONS`.
fn simplex_minimize<F: Fn(&[f64; 3]) -> f64>(f: F, start: [f64; 3]) -> [f64; 3] {
    let mut sim: Vec<[f64; 3]> = vec![start];
    for i in 0..3 {
        let mut v = start;
        if v[i] != 0.0 {
            v[i] *= 1.05;
        } else {
            v[i] = 0.00025;
        }
        sim.push(v);
    }
    let mut cost: Vec<f64> = sim.iter().map(&f).collect();

    let order = |sim: &mut Vec<[f64; 3]>, cost: &mut Vec<f64>| {
        let mut idx: Vec<usize> = (0..sim.len()).collect();
        idx.sort_by(|&a, &b| cost[a].total_cmp(&cost[b]));
        *sim = idx.iter().map(|&i| sim[i]).collect();
        *cost = idx.iter().map(|&i| cost[i]).collect();
    };
    order(&mut sim, &mut cost);

    for _ in 0..MAX_FIT_ITERATIONS {
        let diameter = sim[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&sim[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_TOLERANCE {
            break;
        }

        let mut centroid = [0.0; 3];
        for v in &sim[..3] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / 3.0;
            }
        }
        let worst = sim[3];
        let blend = |t: f64| {
            let mut v = [0.0; 3];
            for i in 0..3 {
                v[i] = centroid[i] + t * (centroid[i] - worst[i]);
            }
            v
        };

        let reflected = blend(1.0);
        let f_reflected = f(&reflected);
        let mut shrink = false;
        if f_reflected < cost[0] {
            let expanded = blend(2.0);
            let f_expanded = f(&expanded);
            if f_expanded < f_reflected {
                sim[3] = expanded;
                cost[3] = f_expanded;
            } else {
                sim[3] = reflected;
                cost[3] = f_reflected;
            }
        } else if f_reflected < cost[2] {
            sim[3] = reflected;
            cost[3] = f_reflected;
        } else if f_reflected < cost[3] {
            let outside = blend(0.5);
            let f_outside = f(&outside);
            if f_outside <= f_reflected {
                sim[3] = outside;
                cost[3] = f_outside;
            } else {
                shrink = true;
            }
        } else {
            let inside = blend(-0.5);
            let f_inside = f(&inside);
            if f_inside < cost[3] {
                sim[3] = inside;
                cost[3] = f_inside;
            } else {
                shrink = true;
            }
        }
        if shrink {
            let anchor = sim[0];
            for i in 1..4 {
                for (s, a) in sim[i].iter_mut().zip(anchor) {
                    *s = a + 0.5 * (*s - a);
                }
                cost[i] = f(&sim[i]);
            }
        }
        order(&mut sim, &mut cost);
    }
    sim[0]
}

/// Least-squares fit of the logistic mapping by simplex descent from the
/// deterministic start a = max(mos), b = 4 / range(metric), c = median(metric).
pub fn logistic_fit(metric: &[f64], mos: &[f64]) -> Result<LogisticCurve> {
    if metric.len() != mos.len() {
        return Err(Error::dimension(format!(
            "fit inputs differ in length: {} vs {}",
            metric.len(),
            mos.len()
        )));
    }
    if metric.len() < 4 {
        return Err(Error::invalid(format!(
            "logistic fit needs at least 4 points, got {}",
            metric.len()
        )));
    }
    check_finite("metric", metric)?;
    check_finite("mos", mos)?;
    if all_equal(metric) {
        return Err(Error::degenerate(
            "cannot fit a curve to a constant metric vector",
        ));
    }
    let lo = metric.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = metric.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sorted = metric.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let start = [
        mos.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        4.0 / (hi - lo),
        median,
    ];
    let best = simplex_minimize(|p| fit_cost(p, metric, mos), start);
    Ok(LogisticCurve {
        a: best[0],
        b: best[1],
        c: best[2],
    })
}

/// Full agreement statistics: PCC and RMSE on logistic-mapped scores,
/// Spearman on the raw scores, and the outlier ratio of the residuals.
///
/// With fewer than 4 points or a constant metric vector no curve can be
/// fitted; scores are then compared unmapped and flagged.
pub fn correlation_stats(metric: &[f64], mos: &[f64]) -> Result<Agreement> {
    if metric.len() != mos.len() {
        return Err(Error::dimension(format!(
            "statistics inputs differ in length: {} vs {}",
            metric.len(),
            mos.len()
        )));
    }
    if metric.len() < 3 {
        return Err(Error::invalid(format!(
            "statistics need at least 3 points, got {}",
            metric.len()
        )));
    }
    check_finite("metric", metric)?;
    check_finite("mos", mos)?;

    let mut flags = AgreementFlags {
        constant_metric: all_equal(metric),
        constant_mos: all_equal(mos),
        ..AgreementFlags::default()
    };

    let curve = if metric.len() >= 4 && !flags.constant_metric {
        Some(logistic_fit(metric, mos)?)
    } else {
        flags.identity_mapping = true;
        None
    };
    let mapped: Vec<f64> = match &curve {
        Some(c) => metric.iter().map(|&x| c.evaluate(x)).collect(),
        None => metric.to_vec(),
    };

    let pcc = if flags.constant_mos || all_equal(&mapped) {
        0.0
    } else {
        pearson(&mapped, mos)?
    };
    let scc = if flags.constant_mos || flags.constant_metric {
        0.0
    } else {
        spearman(metric, mos)?
    };
    let residuals: Vec<f64> = mapped.iter().zip(mos).map(|(&m, &y)| m - y).collect();
    let rmse = (residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64).sqrt();

    Ok(Agreement {
        curve,
        pcc,
        scc,
        rmse,
        outlier_ratio: outlier_ratio(&residuals),
        flags,
    })
}

/// Convenience wrapper extracting score/rating vectors from records.
pub fn agreement_for_records(records: &[EvalRecord]) -> Result<Agreement> {
    for r in records {
        if !(0.0..=10.0).contains(&r.mos) {
            return Err(Error::invalid(format!(
                "record '{}': mos {} outside [0, 10]",
                r.id, r.mos
            )));
        }
    }
    let metric: Vec<f64> = records.iter().map(|r| r.metric_score).collect();
    let mos: Vec<f64> = records.iter().map(|r| r.mos).collect();
    correlation_stats(&metric, &mos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const FIVE_METRIC: [f64; 5] = [0.2, 0.4, 0.5, 0.7, 0.9];
    const FIVE_MOS: [f64; 5] = [2.0, 4.0, 4.0, 7.0, 8.0];

    #[test]
    fn five_point_dataset_matches_the_frozen_oracle() {
        // Expected values were worked out once by an independent
        // least-squares fit plus a by-hand pass over ranks and residuals.
        let stats = correlation_stats(&FIVE_METRIC, &FIVE_MOS).unwrap();
        let curve = stats.curve.expect("five points admit a fit");
        assert_relative_eq!(curve.a, 9.829645666480411, epsilon = 1e-6);
        assert_relative_eq!(curve.b, 4.198667181762002, epsilon = 1e-6);
        assert_relative_eq!(curve.c, 0.5278964322671635, epsilon = 1e-6);
        assert!((stats.pcc - 0.9854019253801791).abs() <= 1e-9);
        assert!((stats.scc - 0.9746794344808964).abs() <= 1e-9);
        assert!((stats.rmse - 0.3731563929488255).abs() <= 1e-9);
        assert_eq!(stats.outlier_ratio, 0.0);
        assert_eq!(stats.flags, AgreementFlags::default());
    }

    #[test]
    fn noiseless_synthetic_data_recovers_the_planted_curve() {
        let truth = LogisticCurve {
            a: 10.0,
            b: 2.0,
            c: 0.5,
        };
        let metric: Vec<f64> = (0..10).map(|i| 0.05 + 0.1 * i as f64).collect();
        let mos: Vec<f64> = metric.iter().map(|&x| truth.evaluate(x)).collect();
        let fit = logistic_fit(&metric, &mos).unwrap();
        assert!((fit.a - truth.a).abs() < 1e-4, "a = {}", fit.a);
        assert!((fit.b - truth.b).abs() < 1e-4, "b = {}", fit.b);
        assert!((fit.c - truth.c).abs() < 1e-4, "c = {}", fit.c);
    }

    #[test]
    fn monotone_data_fits_an_increasing_curve() {
        let metric = [0.1, 0.3, 0.5, 0.7, 0.9];
        let mos = [1.0, 3.0, 5.0, 7.0, 9.0];
        let fit = logistic_fit(&metric, &mos).unwrap();
        assert!(fit.b > 0.0, "b = {}", fit.b);
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        assert!(logistic_fit(&[0.5; 5], &FIVE_MOS).is_err());
        assert!(logistic_fit(&[0.1, 0.2, 0.3], &[1.0, 2.0, 3.0]).is_err());
        assert!(logistic_fit(&FIVE_METRIC, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_mos_flags_and_fits_flat() {
        let metric = [0.2, 0.4, 0.6, 0.8];
        let mos = [5.0; 4];
        let stats = correlation_stats(&metric, &mos).unwrap();
        assert!(stats.flags.constant_mos);
        assert_eq!(stats.pcc, 0.0);
        assert_eq!(stats.scc, 0.0);
        assert!(stats.rmse < 0.05, "rmse = {}", stats.rmse);
    }

    #[test]
    fn constant_metric_falls_back_to_identity_mapping() {
        let stats = correlation_stats(&[0.5; 5], &FIVE_MOS).unwrap();
        assert!(stats.flags.constant_metric);
        assert!(stats.flags.identity_mapping);
        assert!(stats.curve.is_none());
        assert_eq!(stats.pcc, 0.0);
    }

    #[test]
    fn three_perfect_points_score_exactly_one_via_identity_mapping() {
        let v = [1.0, 2.0, 3.0];
        let stats = correlation_stats(&v, &v).unwrap();
        assert!(stats.flags.identity_mapping);
        assert_eq!(stats.pcc, 1.0);
        assert_eq!(stats.scc, 1.0);
        assert_eq!(stats.rmse, 0.0);
        assert_eq!(stats.outlier_ratio, 0.0);
    }

    #[test]
    fn narrow_range_perfect_prediction_is_near_perfect_after_mapping() {
        // Metric equal to MOS on a narrow span: the curve is locally almost
        // linear, so mapping costs only a sliver of correlation.
        let v = [0.55, 0.63, 0.70, 0.78, 0.88, 0.93];
        let stats = correlation_stats(&v, &v).unwrap();
        assert!(stats.pcc > 0.999, "pcc = {}", stats.pcc);
        assert_eq!(stats.scc, 1.0);
        assert!(stats.rmse < 0.05, "rmse = {}", stats.rmse);
        assert_eq!(stats.outlier_ratio, 0.0);
    }

    #[test]
    fn reversed_ranks_give_scc_minus_one() {
        let x = [0.1, 0.2, 0.3, 0.4, 0.5];
        let y = [9.0, 7.0, 5.0, 3.0, 1.0];
        assert_eq!(spearman(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn ties_share_average_ranks() {
        assert_eq!(
            average_ranks(&[10.0, 20.0, 20.0, 30.0]),
            vec![1.0, 2.5, 2.5, 4.0]
        );
        let scc = spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 20.0, 30.0]).unwrap();
        assert_relative_eq!(scc, 4.5 / (5.0f64 * 4.5).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn spearman_ignores_monotone_transforms() {
        let x = [0.3, 1.2, 0.7, 2.5, 1.9];
        let y = [4.0, 6.5, 5.0, 9.0, 7.5];
        let base = spearman(&x, &y).unwrap();
        let stretched: Vec<f64> = x.iter().map(|&v| (3.0 * v).exp()).collect();
        assert_eq!(spearman(&stretched, &y).unwrap(), base);
    }

    #[test]
    fn outlier_rule_uses_twice_the_population_stddev() {
        let residuals = [0.1, -0.1, 0.05, -0.05, 2.0];
        assert_eq!(outlier_ratio(&residuals), 0.2);
        assert_eq!(outlier_ratio(&[0.0; 4]), 0.0);
    }

    #[test]
    fn records_wrapper_checks_the_rating_range() {
        let mk = |score: f64, mos: f64| EvalRecord {
            id: format!("r{score}"),
            distortion: "noise".into(),
            metric_score: score,
            mos,
        };
        let good: Vec<EvalRecord> = FIVE_METRIC
            .iter()
            .zip(FIVE_MOS)
            .map(|(&s, m)| mk(s, m))
            .collect();
        assert!(agreement_for_records(&good).is_ok());
        let bad = vec![mk(0.1, 2.0), mk(0.2, 11.0), mk(0.3, 3.0)];
        assert!(agreement_for_records(&bad).is_err());
    }
}
