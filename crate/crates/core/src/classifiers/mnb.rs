use super::{polar_log_priors, require_polar, ClassifierError, TermWeights};
use crate::corpus::{Category, Vocabulary};

/// Multinomial naive Bayes over the two polar categories.
#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel {
    pub(crate) log_prior: [f64; 2],
    pub(crate) weights: TermWeights,
    pub(crate) alpha: f64,
}

impl MnbModel {
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

    /// Per-term additive smoothing `α_i`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Stores `ln((f_{i,c} + α_i) / (L_c + α_i·|V|))` for every vocabulary term.
pub fn train_mnb(vocab: &Vocabulary, alpha: f64) -> Result<MnbModel, ClassifierError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ClassifierError::InvalidParameter {
            name: "alpha",
            value: alpha,
        });
    }
    require_polar(vocab)?;
    let total_alpha = alpha * vocab.size() as f64;
    let denom = |c: Category| vocab.category_tokens(c) as f64 + total_alpha;
    let (dp, dn) = (denom(Category::Positive), denom(Category::Negative));

    let mut weights = TermWeights::new(vocab.id_space());
    for t in vocab.known_terms() {
        let fp = vocab.term_freq(t, Category::Positive) as f64;
        let fn_ = vocab.term_freq(t, Category::Negative) as f64;
        weights.set(t, ((fp + alpha) / dp).ln(), ((fn_ + alpha) / dn).ln());
    }
    Ok(MnbModel {
        log_prior: polar_log_priors(vocab),
        weights,
        alpha,
    })
}
