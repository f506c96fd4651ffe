use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Method, QuantError, QuantEstimate, QuantMethod};
use crate::classifiers::{count_decisions_par, CumulativeClassifier};
use crate::corpus::{Category, SparseDoc};

/// Default bound on the confusion matrix condition number.
pub const MAX_CONDITION: f64 = 1e8;

/// Row-stochastic matrix of `P(predicted j | true i)` over the polar categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub categories: Vec<Category>,
    pub rates: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    /// Normalizes each row of raw `counts[true][predicted]`.
    pub fn from_counts(categories: Vec<Category>, counts: &[Vec<u64>]) -> Result<Self, QuantError> {
        let mut rates = Vec::with_capacity(counts.len());
        for (c, row) in categories.iter().zip(counts) {
            let total: u64 = row.iter().sum();
            if total == 0 {
                return Err(QuantError::EmptyCategory(*c));
            }
            rates.push(row.iter().map(|&k| k as f64 / total as f64).collect());
        }
        Ok(Self { categories, rates })
    }

    pub fn identity(categories: Vec<Category>) -> Self {
        let n = categories.len();
        let rates = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { categories, rates }
    }

    /// Ratio of extreme singular values.
    pub fn condition(&self) -> f64 {
        let m = self.matrix();
        let sv = m.singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    fn matrix(&self) -> DMatrix<f64> {
        let n = self.categories.len();
        DMatrix::from_fn(n, n, |i, j| self.rates[i][j])
    }
}

/// Counts P and N decisions over the whole result set.
pub fn classify_and_count<M: CumulativeClassifier + ?Sized>(
    model: &M,
    query_id: &str,
    docs: &[SparseDoc],
) -> Result<QuantEstimate, QuantError> {
    if docs.is_empty() {
        return Err(QuantError::EmptyResultSet);
    }
    let (p, n) = count_decisions_par(model, docs);
    QuantEstimate::from_sizes(query_id, Method::new(model.kind(), QuantMethod::ClassifyCount), p as f64, n as f64)
}

/// Tabulates decisions on labeled P and N documents; other labels are ignored.
pub fn estimate_confusion<'a, M: CumulativeClassifier + ?Sized>(
    model: &M,
    validation: impl IntoIterator<Item = &'a SparseDoc>,
) -> Result<ConfusionMatrix, QuantError> {
    let mut counts = vec![vec![0u64; 2]; 2];
    for doc in validation {
        let row = match doc.label {
            Some(Category::Positive) => 0,
            Some(Category::Negative) => 1,
            _ => continue,
        };
        let col = usize::from(model.classify(doc) != Category::Positive);
        counts[row][col] += 1;
    }
    ConfusionMatrix::from_counts(Category::POLAR.to_vec(), &counts)
}

/// Solves `Cᵀ·s = ŝ` for the true category sizes `s`, given the CC decision
/// counts `ŝ`. Rows of `C` sum to one, so `s` keeps the total of `ŝ`.
///
/// Negative sizes are clipped at zero before shares are taken.
pub fn adjusted_classify_and_count(
    cc: &QuantEstimate,
    cm: &ConfusionMatrix,
    max_condition: f64,
) -> Result<QuantEstimate, QuantError> {
    if cm.categories != Category::POLAR {
        return Err(QuantError::InvalidSpec(
            "confusion matrix must cover exactly P and N".into(),
        ));
    }
    let condition = cm.condition();
    if !(condition <= max_condition) {
        return Err(QuantError::IllConditioned { condition });
    }
    let observed = DVector::from_vec(vec![cc.positive_size, cc.negative_size]);
    let system = cm.matrix().transpose();
    let solution = match system.clone().lu().solve(&observed) {
        Some(s) => s,
        None => system
            .svd(true, true)
            .solve(&observed, 1e-12)
            .map_err(|_| QuantError::IllConditioned { condition })?,
    };
    let method = Method::new(cc.method.classifier, QuantMethod::AdjustedClassifyCount);
    QuantEstimate::from_sizes(cc.query_id.clone(), method, solution[0], solution[1])
}
