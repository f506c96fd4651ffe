//! Cumulative quantification of sentiment categories over query result sets.
//!
//! Classifiers expose an additive per-category measure μ_c that can be summed
//! over an entire result set in one pass; a learned linear map turns the sums
//! into category sizes and proportions. Classify-and-count and its adjusted
//! variant are provided as baselines, along with the statistics and the
//! leave-one-out harness used to compare them.

pub mod classifiers;
pub mod corpus;
pub mod harness;
pub mod io;
pub mod quantifier;
pub mod stats;
