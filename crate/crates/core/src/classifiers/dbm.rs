use super::{polar_log_priors, require_polar, ClassifierError, TermWeights};
use crate::corpus::{Category, Vocabulary};

/// Divergence-based variant of naive Bayes: each term is weighted by its
/// contribution `f̂_{i,c}·ln(f̂_{i,c}/π_i)` to the divergence of category `c`
/// from the collection.
#[derive(Debug, Clone, PartialEq)]
pub struct DbmModel {
    pub(crate) log_prior: [f64; 2],
    pub(crate) weights: TermWeights,
    pub(crate) smoothing: f64,
}

impl DbmModel {
    pub fn log_prior(&self, c: Category) -> Option<f64> {
        match c {
            Category::Positive => Some(self.log_prior[0]),
            Category::Negative => Some(self.log_prior[1]),
            _ => None,
        }
    }

    pub fn weights(&self) -> &TermWeights {
        &self.weights
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }
}

/// `w = f̂·ln(f̂/π)`, where `f̂_{i,c} = (f_{i,c} + s)/(L_c + s·|V|)` and `π` is the
/// smoothed collection distribution of `vocab`.
pub fn train_dbm(vocab: &Vocabulary, smoothing: f64) -> Result<DbmModel, ClassifierError> {
    if !(smoothing > 0.0 && smoothing.is_finite()) {
        return Err(ClassifierError::InvalidParameter {
            name: "smoothing",
            value: smoothing,
        });
    }
    require_polar(vocab)?;
    let spread = smoothing * vocab.size() as f64;
    let denom = |c: Category| vocab.category_tokens(c) as f64 + spread;
    let (dp, dn) = (denom(Category::Positive), denom(Category::Negative));

    let mut weights = TermWeights::new(vocab.id_space());
    for t in vocab.known_terms() {
        let pi = vocab.pi(t);
        let fp = (vocab.term_freq(t, Category::Positive) as f64 + smoothing) / dp;
        let fn_ = (vocab.term_freq(t, Category::Negative) as f64 + smoothing) / dn;
        weights.set(t, divergence_term(fp, pi), divergence_term(fn_, pi));
    }
    Ok(DbmModel {
        log_prior: polar_log_priors(vocab),
        weights,
        smoothing,
    })
}

#[inline]
pub(crate) fn divergence_term(f: f64, pi: f64) -> f64 {
    f * (f / pi).ln()
}
