//! Statistical machinery: least squares, Pearson correlation, the two-sample
//! Kolmogorov–Smirnov test, and quantification error measures.

mod ks;
mod measures;
mod ols;
mod pearson;
mod sum;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Category;

pub use ks::{kolmogorov_survival, ks_two_sample, KsMethod, KsResult, EXACT_SIZE_LIMIT};
pub use measures::{error_measures, normalized_kld, smooth, ErrorMeasures, QueryDistribution};
pub use ols::{normal_equation_residual, ols_fit, OlsFit, MAX_GRAM_CONDITION};
pub use pearson::{pearson, pearson_slices, CorrResult};
pub use sum::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("zero variance in one of the series")]
    ZeroVariance,
    #[error("empty sample")]
    EmptySample,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("design rows have different widths")]
    RaggedDesign,
    #[error("rank-deficient design: {reason}")]
    RankDeficient { reason: String },
}

/// One (observed, fitted) pair for a query and category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedPoint {
    pub query_id: String,
    pub category: Category,
    pub observed: f64,
    pub fitted: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    pub points: Vec<PairedPoint>,
}

impl PairedSeries {
    pub fn observed(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.observed).collect()
    }

    pub fn fitted(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fitted).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
