use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::corpus::Category;

/// The additive measures `μ_P` and `μ_N` of a document or document set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CumulativeScore {
    pub positive: f64,
    pub negative: f64,
    /// Number of documents folded into the score.
    pub docs: u64,
}

impl CumulativeScore {
    pub const ZERO: CumulativeScore = CumulativeScore {
        positive: 0.0,
        negative: 0.0,
        docs: 0,
    };

    pub fn single(positive: f64, negative: f64) -> Self {
        Self {
            positive,
            negative,
            docs: 1,
        }
    }

    /// `μ_c` for a polar category; other categories have no measure.
    pub fn get(&self, c: Category) -> Option<f64> {
        match c {
            Category::Positive => Some(self.positive),
            Category::Negative => Some(self.negative),
            _ => None,
        }
    }
}

impl Add for CumulativeScore {
    type Output = CumulativeScore;

    fn add(self, rhs: CumulativeScore) -> CumulativeScore {
        CumulativeScore {
            positive: self.positive + rhs.positive,
            negative: self.negative + rhs.negative,
            docs: self.docs + rhs.docs,
        }
    }
}

impl AddAssign for CumulativeScore {
    fn add_assign(&mut self, rhs: CumulativeScore) {
        *self = *self + rhs;
    }
}

impl Sum for CumulativeScore {
    fn sum<I: Iterator<Item = CumulativeScore>>(iter: I) -> Self {
        iter.fold(CumulativeScore::ZERO, Add::add)
    }
}
