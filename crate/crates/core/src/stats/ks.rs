//! Two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Sample-size product up to which the exact null distribution is used.
pub const EXACT_SIZE_LIMIT: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KsMethod {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Supremum distance between the two empirical CDFs.
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub m: usize,
    pub method: KsMethod,
}

/// Tests whether `a` and `b` come from the same continuous distribution.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(StatsError::NonFinite);
    }
    let gap = max_scaled_gap(a, b);
    let (n, m) = (a.len() as u64, b.len() as u64);
    let statistic = gap as f64 / (n * m) as f64;

    let (short, long) = if n <= m { (n, m) } else { (m, n) };
    let (p_value, method) = if n * m <= EXACT_SIZE_LIMIT {
        (exact_p_value(short, long, gap), KsMethod::Exact)
    } else {
        (asymptotic_p_value(statistic, n, m), KsMethod::Asymptotic)
    };

    Ok(KsResult {
        statistic,
        p_value,
        n: a.len(),
        m: b.len(),
        method,
    })
}

/// `max |i·m − j·n|` over the merged order statistics, i.e. `n·m·D` as an integer.
fn max_scaled_gap(a: &[f64], b: &[f64]) -> u64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len() as i128, ys.len() as i128);

    let (mut i, mut j) = (0usize, 0usize);
    let mut best: i128 = 0;
    while i < xs.len() && j < ys.len() {
        let current = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= current {
            i += 1;
        }
        while j < ys.len() && ys[j] <= current {
            j += 1;
        }
        best = best.max((i as i128 * m - j as i128 * n).abs());
    }
    best as u64
}

/// Probability that a uniformly random lattice path from (0,0) to (n,m)
/// leaves the band `|i·m − j·n| < gap`, which is `P(D ≥ d)` under the null.
fn exact_p_value(n: u64, m: u64, gap: u64) -> f64 {
    if gap == 0 {
        return 1.0;
    }
    let (n, m) = (n as usize, m as usize);
    let inside = |i: usize, j: usize| ((i * m) as i128 - (j * n) as i128).unsigned_abs() < gap as u128;
    let total = (n + m) as f64;

    // prob[j] holds the mass of in-band paths currently at (i, j).
    let mut prob = vec![0.0f64; m + 1];
    prob[0] = 1.0;
    for j in 1..=m {
        prob[j] = if inside(0, j) {
            prob[j - 1] * (m - (j - 1)) as f64 / (total - (j - 1) as f64)
        } else {
            0.0
        };
    }
    for i in 1..=n {
        let mut next = vec![0.0f64; m + 1];
        for j in 0..=m {
            if !inside(i, j) {
                continue;
            }
            let from_left = prob[j] * (n - (i - 1)) as f64 / (total - (i - 1 + j) as f64);
            let from_below = if j > 0 {
                next[j - 1] * (m - (j - 1)) as f64 / (total - (i + j - 1) as f64)
            } else {
                0.0
            };
            next[j] = from_left + from_below;
        }
        prob = next;
    }
    (1.0 - prob[m]).clamp(0.0, 1.0)
}

fn asymptotic_p_value(statistic: f64, n: u64, m: u64) -> f64 {
    let en = (n * m) as f64 / (n + m) as f64;
    let root = en.sqrt();
    let lambda = (root + 0.12 + 0.11 / root) * statistic;
    kolmogorov_survival(lambda)
}

/// `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} exp(−2k²λ²)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut sign = 1.0;
    let mut previous = 0.0f64;
    for k in 1..=100 {
        let term = sign * 2.0 * (a2 * (k * k) as f64).exp();
        sum += term;
        if term.abs() <= 1e-3 * previous || term.abs() <= 1e-12 * sum.abs() {
            return sum.clamp(0.0, 1.0);
        }
        sign = -sign;
        previous = term.abs();
    }
    1.0
}
