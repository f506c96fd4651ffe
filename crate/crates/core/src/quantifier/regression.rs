use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Method, QuantError, QuantEstimate, QuantMethod};
use crate::classifiers::{ClassifierKind, CumulativeScore};
use crate::corpus::Category;
use crate::stats::{ols_fit, OlsFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionMode {
    /// One equation per training query.
    QueryDriven,
    /// One equation per labeled P or N document.
    ItemDriven,
}

/// How features are built from cumulative measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub mode: RegressionMode,
    /// Use `μ_c / (μ_P + μ_N)` and rate targets instead of raw measures and count targets.
    pub normalize: bool,
    /// Append `|D_q|` as a third feature.
    pub include_size: bool,
}

impl FeatureSpec {
    pub const ITEM_DRIVEN: FeatureSpec = FeatureSpec {
        mode: RegressionMode::ItemDriven,
        normalize: false,
        include_size: false,
    };

    pub fn query_driven(normalize: bool, include_size: bool) -> Self {
        Self {
            mode: RegressionMode::QueryDriven,
            normalize,
            include_size,
        }
    }

    pub fn width(&self) -> usize {
        2 + usize::from(self.include_size)
    }

    fn validate(&self) -> Result<(), QuantError> {
        if self.mode == RegressionMode::ItemDriven && (self.normalize || self.include_size) {
            return Err(QuantError::InvalidSpec(
                "item-driven features are the raw per-document measures".into(),
            ));
        }
        Ok(())
    }

    /// Feature row for a document set of `size` documents with measures `score`.
    pub fn features(&self, score: &CumulativeScore, size: u64) -> Result<Vec<f64>, QuantError> {
        let (p, n) = (score.positive, score.negative);
        if !p.is_finite() || !n.is_finite() {
            return Err(QuantError::NonFinite);
        }
        let mut row = if self.normalize {
            let total = p + n;
            if total == 0.0 {
                vec![0.0, 0.0]
            } else {
                vec![p / total, n / total]
            }
        } else {
            vec![p, n]
        };
        if self.include_size {
            row.push(size as f64);
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(QuantError::NonFinite);
        }
        Ok(row)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.mode {
            RegressionMode::QueryDriven => "query-driven",
            RegressionMode::ItemDriven => "item-driven",
        };
        write!(f, "{mode} (normalize={}, include_size={})", self.normalize, self.include_size)
    }
}

/// One training query: its set-level measures and the rates `P% + M%`, `N% + M%`
/// observed on its validation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRow {
    pub score: CumulativeScore,
    pub size: u64,
    pub positive_target: f64,
    pub negative_target: f64,
}

/// One labeled training document and its measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemRow {
    pub score: CumulativeScore,
    pub label: Category,
}

/// Two no-intercept least-squares fits mapping measures to P and N targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub classifier: ClassifierKind,
    pub spec: FeatureSpec,
    /// `α_P, α_N` (and `β_P`).
    pub positive: OlsFit,
    /// `α′_P, α′_N` (and `β_N`).
    pub negative: OlsFit,
    pub training_rows: usize,
    /// Item-driven training rows came from a single class.
    pub one_class: bool,
}

impl RegressionModel {
    /// Unclipped size estimates for a set of `size` documents.
    pub fn raw_sizes(&self, score: &CumulativeScore, size: u64) -> Result<(f64, f64), QuantError> {
        let x = self.spec.features(score, size)?;
        let (p, n) = (self.positive.predict(&x), self.negative.predict(&x));
        Ok(match (self.spec.mode, self.spec.normalize) {
            (RegressionMode::QueryDriven, true) => (p * size as f64, n * size as f64),
            _ => (p, n),
        })
    }

    pub fn method(&self) -> Method {
        let q = match self.spec.mode {
            RegressionMode::QueryDriven => QuantMethod::QueryDriven,
            RegressionMode::ItemDriven => QuantMethod::ItemDriven,
        };
        Method::new(self.classifier, q)
    }
}

/// Fits the query-driven model. With `spec.normalize` the targets are rates;
/// otherwise they are scaled to counts by the set size, matching the scale of
/// raw measures.
pub fn fit_query_driven(
    classifier: ClassifierKind,
    rows: &[QueryRow],
    spec: FeatureSpec,
) -> Result<RegressionModel, QuantError> {
    if spec.mode != RegressionMode::QueryDriven {
        return Err(QuantError::InvalidSpec("expected a query-driven specification".into()));
    }
    spec.validate()?;
    let needed = (spec.width() + 1).max(3);
    if rows.len() < needed {
        return Err(QuantError::TooFewRows {
            needed,
            got: rows.len(),
        });
    }
    let design = rows
        .iter()
        .map(|r| spec.features(&r.score, r.size))
        .collect::<Result<Vec<_>, _>>()?;
    let scale = |r: &QueryRow| if spec.normalize { 1.0 } else { r.size as f64 };
    let yp: Vec<f64> = rows.iter().map(|r| r.positive_target * scale(r)).collect();
    let yn: Vec<f64> = rows.iter().map(|r| r.negative_target * scale(r)).collect();
    Ok(RegressionModel {
        classifier,
        spec,
        positive: ols_fit(&design, &yp, false)?,
        negative: ols_fit(&design, &yn, false)?,
        training_rows: rows.len(),
        one_class: false,
    })
}

/// Fits the item-driven model on P and N documents; other labels are skipped.
/// Targets are `p(x) = 1` for P documents and `n(x) = 1` for N documents.
pub fn fit_item_driven(classifier: ClassifierKind, rows: &[ItemRow]) -> Result<RegressionModel, QuantError> {
    let polar: Vec<&ItemRow> = rows.iter().filter(|r| r.label.is_polar()).collect();
    if polar.len() < 2 {
        return Err(QuantError::TooFewRows {
            needed: 2,
            got: polar.len(),
        });
    }
    let spec = FeatureSpec::ITEM_DRIVEN;
    let design = polar
        .iter()
        .map(|r| spec.features(&r.score, 1))
        .collect::<Result<Vec<_>, _>>()?;
    let yp: Vec<f64> = polar
        .iter()
        .map(|r| if r.label == Category::Positive { 1.0 } else { 0.0 })
        .collect();
    let yn: Vec<f64> = yp.iter().map(|p| 1.0 - p).collect();
    let positives = yp.iter().filter(|&&p| p == 1.0).count();
    Ok(RegressionModel {
        classifier,
        spec,
        positive: ols_fit(&design, &yp, false)?,
        negative: ols_fit(&design, &yn, false)?,
        training_rows: polar.len(),
        one_class: positives == 0 || positives == polar.len(),
    })
}

/// Estimates for a set of `size` documents with measures `score`. `spec`
/// describes how the caller built its features and must match the model.
pub fn predict(
    model: &RegressionModel,
    spec: &FeatureSpec,
    query_id: &str,
    score: &CumulativeScore,
    size: u64,
) -> Result<QuantEstimate, QuantError> {
    if *spec != model.spec {
        return Err(QuantError::SpecMismatch {
            expected: model.spec,
            found: *spec,
        });
    }
    let (p, n) = model.raw_sizes(score, size)?;
    QuantEstimate::from_sizes(query_id, model.method(), p, n)
}
