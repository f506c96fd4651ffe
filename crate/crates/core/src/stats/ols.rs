use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Largest accepted condition number of the column-equilibrated Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// Least-squares fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    /// One coefficient per feature column; the intercept, when requested, is last.
    pub coefficients: Vec<f64>,
    /// Standard errors, `None` when there are no residual degrees of freedom.
    pub std_errors: Option<Vec<f64>>,
    pub residual_sum_squares: f64,
    pub degrees_of_freedom: usize,
}

impl OlsFit {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let intercept = self.coefficients.len() > features.len();
        let mut y: f64 = features
            .iter()
            .zip(&self.coefficients)
            .map(|(x, b)| x * b)
            .sum();
        if intercept {
            y += self.coefficients[features.len()];
        }
        y
    }
}

/// Ordinary least squares through the normal equations.
///
/// Columns are equilibrated to unit norm before the Gram matrix is factored
/// (Cholesky), followed by one step of iterative refinement. Rank deficiency
/// is detected from the equilibrated Gram spectrum.
pub fn ols_fit(rows: &[Vec<f64>], y: &[f64], intercept: bool) -> Result<OlsFit, StatsError> {
    let n = rows.len();
    if n != y.len() {
        return Err(StatsError::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(StatsError::RaggedDesign);
    }
    let p = width + usize::from(intercept);
    if p == 0 {
        return Err(StatsError::RankDeficient {
            reason: "design matrix has no columns".into(),
        });
    }
    if n < p {
        return Err(StatsError::RankDeficient {
            reason: format!("{n} rows for {p} unknowns"),
        });
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let x = DMatrix::from_fn(n, p, |i, j| if j < width { rows[i][j] } else { 1.0 });
    let target = DVector::from_column_slice(y);

    let scale: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if let Some(j) = scale.iter().position(|&s| s == 0.0) {
        return Err(StatsError::RankDeficient {
            reason: format!("column {j} is identically zero"),
        });
    }
    let xs = DMatrix::from_fn(n, p, |i, j| x[(i, j)] / scale[j]);
    let gram = xs.transpose() * &xs;

    let eigen = SymmetricEigen::new(gram.clone());
    let max_ev = eigen.eigenvalues.max();
    let min_ev = eigen.eigenvalues.min();
    if min_ev <= 0.0 || max_ev / min_ev > MAX_GRAM_CONDITION {
        return Err(StatsError::RankDeficient {
            reason: format!(
                "equilibrated Gram condition {:.3e} exceeds {:.0e}",
                if min_ev <= 0.0 { f64::INFINITY } else { max_ev / min_ev },
                MAX_GRAM_CONDITION
            ),
        });
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| StatsError::RankDeficient {
            reason: "Gram matrix is not positive definite".into(),
        })?;

    let rhs = xs.transpose() * &target;
    let mut beta = chol.solve(&rhs);
    let correction = &rhs - &gram * &beta;
    beta += chol.solve(&correction);

    let coefficients: Vec<f64> = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    let fitted = &x * DVector::from_column_slice(&coefficients);
    let residual_sum_squares = (&target - fitted).norm_squared();
    let degrees_of_freedom = n - p;

    let std_errors = (degrees_of_freedom > 0).then(|| {
        let sigma2 = residual_sum_squares / degrees_of_freedom as f64;
        let inv = chol.inverse();
        (0..p)
            .map(|j| (sigma2 * inv[(j, j)]).sqrt() / scale[j])
            .collect()
    });

    Ok(OlsFit {
        coefficients,
        std_errors,
        residual_sum_squares,
        degrees_of_freedom,
    })
}

/// `Xᵀ(y − Xβ)` for a fitted model, one entry per column.
pub fn normal_equation_residual(rows: &[Vec<f64>], y: &[f64], fit: &OlsFit) -> Vec<f64> {
    let p = fit.coefficients.len();
    let mut out = vec![0.0; p];
    for (row, &target) in rows.iter().zip(y) {
        let r = target - fit.predict(row);
        for (j, slot) in out.iter_mut().enumerate() {
            let xj = row.get(j).copied().unwrap_or(1.0);
            *slot += xj * r;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_proportional_data() {
        let rows: Vec<Vec<f64>> = (1..=5).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (1..=5).map(|i| 2.0 * i as f64).collect();
        let fit = ols_fit(&rows, &y, false).unwrap();
        assert_relative_eq!(fit.coefficients[0], 2.0, epsilon = 1e-12);
        assert!(fit.residual_sum_squares < 1e-20);
    }

    #[test]
    fn identity_design() {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let fit = ols_fit(&rows, &[3.0, 5.0], false).unwrap();
        assert_relative_eq!(fit.coefficients[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(fit.coefficients[1], 5.0, epsilon = 1e-12);
        assert!(fit.std_errors.is_none());
    }

    #[test]
    fn intercept_column_is_last() {
        let rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..6).map(|i| 1.5 * i as f64 + 4.0).collect();
        let fit = ols_fit(&rows, &y, true).unwrap();
        assert_relative_eq!(fit.coefficients[0], 1.5, epsilon = 1e-10);
        assert_relative_eq!(fit.coefficients[1], 4.0, epsilon = 1e-10);
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let rows: Vec<Vec<f64>> = (1..6).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let y = vec![1.0; 5];
        assert!(matches!(
            ols_fit(&rows, &y, false),
            Err(StatsError::RankDeficient { .. })
        ));
    }

    #[test]
    fn underdetermined_is_rejected() {
        let rows = vec![vec![1.0, 2.0]];
        assert!(ols_fit(&rows, &[1.0], false).is_err());
    }

    #[test]
    fn zero_column_is_rejected() {
        let rows = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 3.0]];
        assert!(ols_fit(&rows, &[1.0, 2.0, 3.0], false).is_err());
    }
}
