//! Per-query category size and proportion estimates: classify-and-count, its
//! confusion-matrix adjustment, and the cumulative regression model in
//! query-driven and item-driven settings.

mod count;
mod estimate;
mod regression;

use thiserror::Error;

use crate::corpus::Category;
use crate::stats::StatsError;

pub use count::{
    adjusted_classify_and_count, classify_and_count, estimate_confusion, ConfusionMatrix, MAX_CONDITION,
};
pub use estimate::{read_estimates_csv, write_estimates_csv, Method, QuantEstimate, QuantMethod};
pub use regression::{
    fit_item_driven, fit_query_driven, predict, FeatureSpec, ItemRow, QueryRow, RegressionMode, RegressionModel,
};

#[derive(Debug, Error)]
pub enum QuantError {
    #[error("result set is empty")]
    EmptyResultSet,
    #[error("no validation documents with true category {0}")]
    EmptyCategory(Category),
    #[error("confusion matrix is singular or ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },
    #[error("need at least {needed} training rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("features built as {found}, model was fitted with {expected}")]
    SpecMismatch { expected: FeatureSpec, found: FeatureSpec },
    #[error("invalid feature specification: {0}")]
    InvalidSpec(String),
    #[error("regression failed: {0}")]
    Regression(#[from] StatsError),
    #[error("non-finite feature or estimate")]
    NonFinite,
    #[error("estimates file: {0}")]
    Csv(#[from] csv::Error),
}
