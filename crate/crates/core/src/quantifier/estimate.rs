use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::QuantError;
use crate::classifiers::ClassifierKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum QuantMethod {
    #[serde(rename = "cc")]
    ClassifyCount,
    #[serde(rename = "acc")]
    AdjustedClassifyCount,
    #[serde(rename = "phi-query")]
    QueryDriven,
    #[serde(rename = "phi-item")]
    ItemDriven,
}

impl QuantMethod {
    pub const ALL: [QuantMethod; 4] = [
        QuantMethod::ClassifyCount,
        QuantMethod::AdjustedClassifyCount,
        QuantMethod::QueryDriven,
        QuantMethod::ItemDriven,
    ];

    pub const fn name(self) -> &'static str {
        match self {
            QuantMethod::ClassifyCount => "cc",
            QuantMethod::AdjustedClassifyCount => "acc",
            QuantMethod::QueryDriven => "phi-query",
            QuantMethod::ItemDriven => "phi-item",
        }
    }
}

impl fmt::Display for QuantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QuantMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuantMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown quantifier {s:?} (expected cc, acc, phi-query or phi-item)"))
    }
}

/// A classifier paired with a quantification method, written `mnb-cc`, `svm-phi-query`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Method {
    pub classifier: ClassifierKind,
    pub quantifier: QuantMethod,
}

impl Method {
    pub fn new(classifier: ClassifierKind, quantifier: QuantMethod) -> Self {
        Self { classifier, quantifier }
    }

    /// Every combination, classifier-major.
    pub fn all() -> impl Iterator<Item = Method> {
        ClassifierKind::ALL
            .into_iter()
            .flat_map(|c| QuantMethod::ALL.into_iter().map(move |q| Method::new(c, q)))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.classifier, self.quantifier)
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, q) = s.split_once('-').ok_or_else(|| format!("malformed method {s:?}"))?;
        Ok(Method::new(c.parse()?, q.parse()?))
    }
}

impl From<Method> for String {
    fn from(m: Method) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for Method {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Estimated sizes and shares of P and N for one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantEstimate {
    pub query_id: String,
    pub method: Method,
    #[serde(rename = "P_size")]
    pub positive_size: f64,
    #[serde(rename = "N_size")]
    pub negative_size: f64,
    #[serde(rename = "P_share")]
    pub positive_share: f64,
    #[serde(rename = "N_share")]
    pub negative_share: f64,
    /// Both sizes were clipped to zero; shares fall back to one half each.
    #[serde(rename = "degenerate_flag")]
    pub degenerate: bool,
}

impl QuantEstimate {
    /// Clips negative sizes to zero and derives shares as `P/(P+N)`, `N/(P+N)`.
    pub fn from_sizes(query_id: impl Into<String>, method: Method, positive: f64, negative: f64) -> Result<Self, QuantError> {
        if !positive.is_finite() || !negative.is_finite() {
            return Err(QuantError::NonFinite);
        }
        let (p, n) = (positive.max(0.0), negative.max(0.0));
        let total = p + n;
        let (positive_share, negative_share, degenerate) = if total > 0.0 {
            let ps = p / total;
            (ps, 1.0 - ps, false)
        } else {
            (0.5, 0.5, true)
        };
        Ok(Self {
            query_id: query_id.into(),
            method,
            positive_size: p,
            negative_size: n,
            positive_share,
            negative_share,
            degenerate,
        })
    }

    pub fn share(&self, c: crate::corpus::Category) -> Option<f64> {
        match c {
            crate::corpus::Category::Positive => Some(self.positive_share),
            crate::corpus::Category::Negative => Some(self.negative_share),
            _ => None,
        }
    }
}

pub fn write_estimates_csv<W: Write>(out: W, estimates: &[QuantEstimate]) -> Result<(), QuantError> {
    let mut writer = csv::Writer::from_writer(out);
    for e in estimates {
        writer.serialize(e)?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_estimates_csv<R: Read>(input: R) -> Result<Vec<QuantEstimate>, QuantError> {
    let mut reader = csv::Reader::from_reader(input);
    let rows = reader.deserialize().collect::<Result<Vec<QuantEstimate>, _>>()?;
    Ok(rows)
}
