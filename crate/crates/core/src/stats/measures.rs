use serde::{Deserialize, Serialize};

use super::{PairedSeries, StatsError};

/// True and estimated category distributions for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryDistribution {
    pub query_id: String,
    pub truth: Vec<f64>,
    pub estimate: Vec<f64>,
    /// |D_q|, used for the zero-smoothing constant.
    pub set_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMeasures {
    pub ae: f64,
    pub rae: f64,
    pub kld: f64,
    pub nkld: f64,
}

/// Smooths a distribution with `ε = 1/(2|D_q|)`: `(p + ε) / (1 + ε·|C|)`.
pub fn smooth(dist: &[f64], set_size: u64) -> Vec<f64> {
    let eps = 1.0 / (2.0 * set_size.max(1) as f64);
    let denom = 1.0 + eps * dist.len() as f64;
    dist.iter().map(|p| (p + eps) / denom).collect()
}

/// `2·logistic(x) − 1`, mapping [0, ∞) onto [0, 1).
pub fn normalized_kld(kld: f64) -> f64 {
    2.0 / (1.0 + (-kld).exp()) - 1.0
}

/// AE over the paired series; RAE, KLD and NKLD over per-query distributions.
///
/// A query whose true distribution contains a zero is smoothed (both sides)
/// before RAE and KLD are evaluated.
pub fn error_measures(
    series: &PairedSeries,
    distributions: &[QueryDistribution],
) -> Result<ErrorMeasures, StatsError> {
    if series.points.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    if distributions.is_empty() {
        return Err(StatsError::TooFewPoints { needed: 1, got: 0 });
    }
    let cells: usize = distributions.iter().map(|d| d.truth.len()).sum();
    if cells != series.points.len() {
        return Err(StatsError::LengthMismatch {
            left: series.points.len(),
            right: cells,
        });
    }
    for d in distributions {
        if d.truth.len() != d.estimate.len() {
            return Err(StatsError::LengthMismatch {
                left: d.truth.len(),
                right: d.estimate.len(),
            });
        }
    }
    if series
        .points
        .iter()
        .any(|p| !p.observed.is_finite() || !p.fitted.is_finite())
    {
        return Err(StatsError::NonFinite);
    }

    let ae = series
        .points
        .iter()
        .map(|p| (p.observed - p.fitted).abs())
        .sum::<f64>()
        / series.points.len() as f64;

    let mut rae_sum = 0.0;
    let mut kld_sum = 0.0;
    for d in distributions {
        let (truth, estimate) = if d.truth.iter().any(|&p| p <= 0.0) {
            (smooth(&d.truth, d.set_size), smooth(&d.estimate, d.set_size))
        } else {
            (d.truth.clone(), d.estimate.clone())
        };
        rae_sum += truth
            .iter()
            .zip(&estimate)
            .map(|(p, q)| (p - q).abs() / p)
            .sum::<f64>()
            / truth.len() as f64;
        kld_sum += kl_divergence(&truth, &estimate);
    }
    let rae = rae_sum / distributions.len() as f64;
    let kld = kld_sum / distributions.len() as f64;
    if !kld.is_finite() {
        return Err(StatsError::NonFinite);
    }

    Ok(ErrorMeasures {
        ae,
        rae,
        kld,
        nkld: normalized_kld(kld),
    })
}

fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0)
}
