//! Prediction-accuracy statistics.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{PmpError, Result};

/// Largest sample size for which signed-rank p-values are computed exactly.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YearFit {
    pub year: i32,
    pub n: usize,
    pub r_squared: Option<f64>,
    pub pearson_r: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub r_squared: f64,
    pub pearson_r: f64,
    pub n: usize,
    pub per_year: Vec<YearFit>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation and the R² of the least-squares line of `predicted` on `observed`.
pub fn evaluate_predictions(predicted: &[f64], observed: &[f64]) -> Result<EvaluationResult> {
    if predicted.len() != observed.len() {
        return Err(PmpError::Domain(format!(
            "{} predictions for {} observations",
            predicted.len(),
            observed.len()
        )));
    }
    let n = predicted.len();
    if n < 2 {
        return Err(PmpError::UndefinedStatistic(format!(
            "need at least two pairs, got {n}"
        )));
    }
    let (mp, mo) = (mean(predicted), mean(observed));
    let (mut spp, mut soo, mut spo) = (0.0, 0.0, 0.0);
    for (p, o) in predicted.iter().zip(observed) {
        let (dp, dob) = (p - mp, o - mo);
        spp += dp * dp;
        soo += dob * dob;
        spo += dp * dob;
    }
    if spp == 0.0 || soo == 0.0 {
        return Err(PmpError::UndefinedStatistic(
            "zero variance in predicted or observed values".into(),
        ));
    }
    let r = (spo / (spp * soo).sqrt()).clamp(-1.0, 1.0);

    let slope = spo / soo;
    let intercept = mp - slope * mo;
    let ss_res: f64 = predicted
        .iter()
        .zip(observed)
        .map(|(p, o)| {
            let e = p - (intercept + slope * o);
            e * e
        })
        .sum();
    let r_squared = (1.0 - ss_res / spp).clamp(0.0, 1.0);

    Ok(EvaluationResult {
        r_squared,
        pearson_r: r,
        n,
        per_year: Vec::new(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PValueMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Pairs with a nonzero difference.
    pub n: usize,
    /// Sum of ranks of positive differences.
    pub statistic: f64,
    /// Positive minus negative rank sums.
    pub signed_statistic: f64,
    pub p_value: f64,
    pub method: PValueMethod,
    /// Median of `observed - predicted` over all pairs.
    pub median_difference: f64,
}

/// Average ranks of `values`, ascending, ties sharing the mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*a].total_cmp(&values[*b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in &order[i..=j] {
            ranks[*k] = rank;
        }
        i = j + 1;
    }
    ranks
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Linearly interpolated sample quantile (R type 7).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Two-sided exact p-value for the positive rank sum, counting sign
/// assignments over doubled (integer) ranks.
fn exact_p_value(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0_f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for d in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + d] += counts[s];
            }
        }
        reach += d;
    }
    let observed = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / all;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / all;
    (2.0 * lower.min(upper)).min(1.0)
}

fn normal_p_value(ranks: &[f64], magnitudes: &[f64], w_plus: f64) -> Result<f64> {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return Err(PmpError::UndefinedStatistic(
            "signed-rank variance is zero".into(),
        ));
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(erfc(z / std::f64::consts::SQRT_2).min(1.0))
}

/// Paired signed-rank test on `(observed, predicted)` pairs. Exact p-values up
/// to [`EXACT_MAX_N`] nonzero differences, normal approximation beyond.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult> {
    wilcoxon_signed_rank_with(pairs, None)
}

/// As [`wilcoxon_signed_rank`] with the p-value method forced when `method` is given.
pub fn wilcoxon_signed_rank_with(
    pairs: &[(f64, f64)],
    method: Option<PValueMethod>,
) -> Result<WilcoxonResult> {
    let diffs: Vec<f64> = pairs.iter().map(|(o, p)| o - p).collect();
    let nonzero: Vec<f64> = diffs.iter().cloned().filter(|d| *d != 0.0).collect();
    if nonzero.is_empty() {
        return Err(PmpError::UndefinedStatistic(
            "all paired differences are zero".into(),
        ));
    }
    let magnitudes: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let w_plus: f64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let w_minus: f64 = ranks.iter().sum::<f64>() - w_plus;

    let method = method.unwrap_or(if nonzero.len() <= EXACT_MAX_N {
        PValueMethod::Exact
    } else {
        PValueMethod::NormalApproximation
    });
    let p_value = match method {
        PValueMethod::Exact => exact_p_value(&ranks, w_plus),
        PValueMethod::NormalApproximation => normal_p_value(&ranks, &magnitudes, w_plus)?,
    };
    Ok(WilcoxonResult {
        n: nonzero.len(),
        statistic: w_plus,
        signed_statistic: w_plus - w_minus,
        p_value,
        method,
        median_difference: median(&diffs),
    })
}
