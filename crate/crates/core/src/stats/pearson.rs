use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{PairedSeries, StatsError};

/// Two-sided normal quantile for a 95% interval.
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrResult {
    pub rho: f64,
    pub n: usize,
    /// Fisher-z 95% interval; absent when n ≤ 3.
    pub interval: Option<(f64, f64)>,
    /// Two-sided t-test of ρ = 0; absent when n ≤ 2.
    pub p_value: Option<f64>,
}

/// Pearson product-moment correlation of observed against fitted values.
pub fn pearson(series: &PairedSeries) -> Result<CorrResult, StatsError> {
    let (observed, fitted): (Vec<f64>, Vec<f64>) =
        series.points.iter().map(|p| (p.observed, p.fitted)).unzip();
    pearson_slices(&observed, &fitted)
}

pub fn pearson_slices(x: &[f64], y: &[f64]) -> Result<CorrResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooFewPoints { needed: 2, got: n });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    // Single-pass co-moment update.
    let (mut mean_x, mut mean_y) = (0.0, 0.0);
    let (mut m2x, mut m2y, mut cxy) = (0.0, 0.0, 0.0);
    for (k, (&xi, &yi)) in x.iter().zip(y).enumerate() {
        let count = (k + 1) as f64;
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        mean_x += dx / count;
        mean_y += dy / count;
        m2x += dx * (xi - mean_x);
        m2y += dy * (yi - mean_y);
        cxy += dx * (yi - mean_y);
    }
    if m2x <= 0.0 || m2y <= 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    let rho = (cxy / (m2x.sqrt() * m2y.sqrt())).clamp(-1.0, 1.0);

    let interval = (n > 3).then(|| {
        let z = rho.atanh();
        let half = Z_95 / ((n - 3) as f64).sqrt();
        ((z - half).tanh(), (z + half).tanh())
    });

    let p_value = (n > 2).then(|| {
        if rho.abs() >= 1.0 {
            return 0.0;
        }
        let dof = (n - 2) as f64;
        let t = rho * (dof / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    });

    Ok(CorrResult {
        rho,
        n,
        interval,
        p_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_positive_and_negative() {
        let r = pearson_slices(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_abs_diff_eq!(r.rho, 1.0, epsilon = 1e-15);
        let r = pearson_slices(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_abs_diff_eq!(r.rho, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn half_correlation_by_hand() {
        // deviations (-1,0,1) and (-1,1,0): cross sum 1, squared sums 2 and 2
        let r = pearson_slices(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert_abs_diff_eq!(r.rho, 0.5, epsilon = 1e-15);
        assert!(r.interval.is_none(), "n = 3 leaves no Fisher degrees of freedom");
        assert!(r.p_value.is_some());
    }

    #[test]
    fn zero_variance_is_an_error() {
        assert_eq!(
            pearson_slices(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(StatsError::ZeroVariance)
        );
    }

    #[test]
    fn interval_brackets_rho() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v + (v * 1.7).sin() * 3.0).collect();
        let r = pearson_slices(&x, &y).unwrap();
        let (lo, hi) = r.interval.unwrap();
        assert!(lo <= r.rho && r.rho <= hi);
        assert!(r.p_value.unwrap() < 0.05);
    }
}
