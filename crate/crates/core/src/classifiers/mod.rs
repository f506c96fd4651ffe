//! Classifiers with additive cumulative measures: multinomial naive Bayes,
//! its divergence-based variant, and a linear SVM.

mod dbm;
mod linear;
mod mnb;
mod persist;
mod score;
mod svm;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Category, SparseDoc, Vocabulary};
use crate::stats::CompensatedSum;

pub use dbm::{train_dbm, DbmModel};
pub use linear::{TermTotals, TermWeights};
pub use mnb::{train_mnb, MnbModel};
pub use persist::{load_model, save_model, StoredModel};
pub use score::CumulativeScore;
pub use svm::{train_svm, SvmModel, SvmParams};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("no training documents in category {0}")]
    EmptyCategory(Category),
    #[error("invalid {name}: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("training diverged to non-finite weights")]
    Diverged,
    #[error("model was trained on vocabulary {expected}, corpus has {found}")]
    VocabularyMismatch { expected: String, found: String },
    #[error("model references term {0:?} missing from the dictionary")]
    UnknownTerm(String),
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Mnb,
    Dbm,
    Svm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Mnb, ClassifierKind::Dbm, ClassifierKind::Svm];

    pub const fn name(self) -> &'static str {
        match self {
            ClassifierKind::Mnb => "mnb",
            ClassifierKind::Dbm => "dbm",
            ClassifierKind::Svm => "svm",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassifierKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown classifier {s:?} (expected mnb, dbm or svm)"))
    }
}

/// A trained classifier exposing a per-document decision and additive measures.
pub trait CumulativeClassifier: Send + Sync {
    fn kind(&self) -> ClassifierKind;

    /// `μ_P(x)` and `μ_N(x)`.
    fn mu_doc(&self, doc: &SparseDoc) -> CumulativeScore;

    /// P or N; ties go to N.
    fn classify(&self, doc: &SparseDoc) -> Category;

    /// Term weights when both measures are linear in term counts.
    fn term_weights(&self) -> Option<&TermWeights> {
        None
    }
}

fn argmax_polar(score_p: f64, score_n: f64) -> Category {
    if score_p > score_n {
        Category::Positive
    } else {
        Category::Negative
    }
}

impl CumulativeClassifier for MnbModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Mnb
    }

    fn mu_doc(&self, doc: &SparseDoc) -> CumulativeScore {
        let (p, n) = self.weights.score(doc);
        CumulativeScore::single(p, n)
    }

    fn classify(&self, doc: &SparseDoc) -> Category {
        let (p, n) = self.weights.score(doc);
        argmax_polar(self.log_prior[0] + p, self.log_prior[1] + n)
    }

    fn term_weights(&self) -> Option<&TermWeights> {
        Some(&self.weights)
    }
}

impl CumulativeClassifier for DbmModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Dbm
    }

    fn mu_doc(&self, doc: &SparseDoc) -> CumulativeScore {
        let (p, n) = self.weights.score(doc);
        CumulativeScore::single(p, n)
    }

    fn classify(&self, doc: &SparseDoc) -> Category {
        let (p, n) = self.weights.score(doc);
        argmax_polar(self.log_prior[0] + p, self.log_prior[1] + n)
    }

    fn term_weights(&self) -> Option<&TermWeights> {
        Some(&self.weights)
    }
}

impl CumulativeClassifier for SvmModel {
    fn kind(&self) -> ClassifierKind {
        ClassifierKind::Svm
    }

    /// Only documents strictly outside the margin band contribute.
    fn mu_doc(&self, doc: &SparseDoc) -> CumulativeScore {
        let s = self.decision(doc);
        let positive = if s > self.margin { s } else { 0.0 };
        let negative = if s < -self.margin { -s } else { 0.0 };
        CumulativeScore::single(positive, negative)
    }

    fn classify(&self, doc: &SparseDoc) -> Category {
        argmax_polar(self.decision(doc), 0.0)
    }
}

/// Any of the three trained models.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Mnb(MnbModel),
    Dbm(DbmModel),
    Svm(SvmModel),
}

impl Model {
    fn inner(&self) -> &dyn CumulativeClassifier {
        match self {
            Model::Mnb(m) => m,
            Model::Dbm(m) => m,
            Model::Svm(m) => m,
        }
    }
}

impl CumulativeClassifier for Model {
    fn kind(&self) -> ClassifierKind {
        self.inner().kind()
    }

    fn mu_doc(&self, doc: &SparseDoc) -> CumulativeScore {
        self.inner().mu_doc(doc)
    }

    fn classify(&self, doc: &SparseDoc) -> Category {
        self.inner().classify(doc)
    }

    fn term_weights(&self) -> Option<&TermWeights> {
        self.inner().term_weights()
    }
}

impl From<MnbModel> for Model {
    fn from(m: MnbModel) -> Self {
        Model::Mnb(m)
    }
}

impl From<DbmModel> for Model {
    fn from(m: DbmModel) -> Self {
        Model::Dbm(m)
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Svm(m)
    }
}

/// Hyperparameters for training any of the three models.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    /// Per-term smoothing `α_i` of naive Bayes.
    pub alpha: f64,
    /// Smoothing of the divergence model's category distributions.
    pub smoothing: f64,
    pub svm: SvmParams,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            smoothing: 0.01,
            svm: SvmParams::default(),
        }
    }
}

/// Trains `kind` on the P and N documents in `docs`, using `vocab` for the
/// probabilistic models.
pub fn train<'a>(
    kind: ClassifierKind,
    vocab: &Vocabulary,
    docs: impl IntoIterator<Item = &'a SparseDoc>,
    params: &TrainParams,
) -> Result<Model, ClassifierError> {
    Ok(match kind {
        ClassifierKind::Mnb => train_mnb(vocab, params.alpha)?.into(),
        ClassifierKind::Dbm => train_dbm(vocab, params.smoothing)?.into(),
        ClassifierKind::Svm => train_svm(docs, &params.svm)?.into(),
    })
}

fn require_polar(vocab: &Vocabulary) -> Result<(), ClassifierError> {
    for c in Category::POLAR {
        if vocab.category_docs(c) == 0 || vocab.category_tokens(c) == 0 {
            return Err(ClassifierError::EmptyCategory(c));
        }
    }
    Ok(())
}

fn polar_log_priors(vocab: &Vocabulary) -> [f64; 2] {
    let p = vocab.category_docs(Category::Positive) as f64;
    let n = vocab.category_docs(Category::Negative) as f64;
    [(p / (p + n)).ln(), (n / (p + n)).ln()]
}

#[derive(Debug, Clone, Copy, Default)]
struct ScoreAccumulator {
    positive: CompensatedSum,
    negative: CompensatedSum,
    docs: u64,
}

impl ScoreAccumulator {
    fn add(&mut self, s: CumulativeScore) {
        self.positive.add(s.positive);
        self.negative.add(s.negative);
        self.docs += s.docs;
    }

    fn merge(&mut self, other: &ScoreAccumulator) {
        self.positive.merge(&other.positive);
        self.negative.merge(&other.negative);
        self.docs += other.docs;
    }

    fn finish(&self) -> CumulativeScore {
        CumulativeScore {
            positive: self.positive.value(),
            negative: self.negative.value(),
            docs: self.docs,
        }
    }
}

/// `μ_c(D) = Σ_{x∈D} μ_c(x)` in one streaming pass with compensated summation.
pub fn mu_set<'a, M: CumulativeClassifier + ?Sized>(
    model: &M,
    docs: impl IntoIterator<Item = &'a SparseDoc>,
) -> CumulativeScore {
    let mut acc = ScoreAccumulator::default();
    for doc in docs {
        acc.add(model.mu_doc(doc));
    }
    acc.finish()
}

const PAR_CHUNK: usize = 8192;

/// Parallel [`mu_set`]. Chunk boundaries are fixed, so the result does not
/// depend on the number of worker threads.
pub fn mu_set_par<M: CumulativeClassifier + ?Sized>(model: &M, docs: &[SparseDoc]) -> CumulativeScore {
    let partials: Vec<ScoreAccumulator> = docs
        .par_chunks(PAR_CHUNK)
        .map(|chunk| {
            let mut acc = ScoreAccumulator::default();
            for doc in chunk {
                acc.add(model.mu_doc(doc));
            }
            acc
        })
        .collect();
    let mut total = ScoreAccumulator::default();
    for p in &partials {
        total.merge(p);
    }
    total.finish()
}

/// `μ_c(D)` from aggregated term counts, for models that are linear in them.
pub fn mu_totals<M: CumulativeClassifier + ?Sized>(model: &M, totals: &TermTotals) -> Option<CumulativeScore> {
    let weights = model.term_weights()?;
    let (positive, negative) = weights.score_totals(totals);
    Some(CumulativeScore {
        positive,
        negative,
        docs: totals.docs(),
    })
}

/// Counts P and N decisions over `docs`.
pub fn count_decisions<'a, M: CumulativeClassifier + ?Sized>(
    model: &M,
    docs: impl IntoIterator<Item = &'a SparseDoc>,
) -> (u64, u64) {
    let mut counts = (0, 0);
    for doc in docs {
        match model.classify(doc) {
            Category::Positive => counts.0 += 1,
            _ => counts.1 += 1,
        }
    }
    counts
}

/// Parallel [`count_decisions`].
pub fn count_decisions_par<M: CumulativeClassifier + ?Sized>(model: &M, docs: &[SparseDoc]) -> (u64, u64) {
    docs.par_chunks(PAR_CHUNK)
        .map(|chunk| count_decisions(model, chunk))
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
}
