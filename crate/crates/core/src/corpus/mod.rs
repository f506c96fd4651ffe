//! Data model, ingestion, vocabulary statistics and validation sampling for
//! query-partitioned labeled corpora.

mod dictionary;
mod ingest;
mod sampling;
mod store;
mod tokenize;
mod vocabulary;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dictionary::TermDictionary;
pub use ingest::{
    ingest, ingest_reader, parse_record, write_jsonl, write_tsv, InputFormat, RawRecord,
    RecordReader,
};
pub use sampling::{category_rates, sample_indices, sample_order, validation_size, CategoryRates};
pub use store::{
    read_corpus_dir, read_dictionary, read_manifest, write_corpus_dir, CorpusManifest, DocStream,
    QuerySummary, UnknownTerms, CORPUS_FILE, DICTIONARY_FILE, MANIFEST_FILE,
};
pub use tokenize::tokenize;
pub use vocabulary::{build_vocabulary, Vocabulary, VocabularyBuilder};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("smoothing must be positive and finite, got {0}")]
    InvalidSmoothing(f64),
    #[error("sigma must lie in (0, 1], got {0}")]
    InvalidSigma(f64),
    #[error("result set {0:?} has an empty validation sample")]
    EmptyValidation(String),
    #[error("validation document {0:?} carries no label")]
    UnlabeledValidation(String),
    #[error("validation index {index} out of range for {len} documents")]
    ValidationOutOfRange { index: usize, len: usize },
    #[error("term {0:?} is not in the corpus dictionary")]
    UnknownTerm(String),
    #[error("duplicate term {0:?} in dictionary")]
    DuplicateTerm(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Assessment category of a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "P")]
    Positive,
    #[serde(rename = "N")]
    Negative,
    #[serde(rename = "M")]
    Mixed,
    #[serde(rename = "X")]
    Neutral,
    #[serde(rename = "O")]
    Other,
    #[serde(rename = "NR")]
    NonRelevant,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Positive,
        Category::Negative,
        Category::Mixed,
        Category::Neutral,
        Category::Other,
        Category::NonRelevant,
    ];

    /// The two polarities the classifiers are trained on.
    pub const POLAR: [Category; 2] = [Category::Positive, Category::Negative];

    pub const fn tag(self) -> &'static str {
        match self {
            Category::Positive => "P",
            Category::Negative => "N",
            Category::Mixed => "M",
            Category::Neutral => "X",
            Category::Other => "O",
            Category::NonRelevant => "NR",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn is_relevant(self) -> bool {
        !matches!(self, Category::NonRelevant)
    }

    pub const fn is_polar(self) -> bool {
        matches!(self, Category::Positive | Category::Negative)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown category tag {0:?}")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.tag() == s)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

/// Index of a term in a [`TermDictionary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermId(pub u32);

impl TermId {
    #[inline]
    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

pub type QueryId = Arc<str>;

/// A document as sorted sparse term frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDoc {
    pub id: String,
    terms: Vec<(TermId, u32)>,
    pub label: Option<Category>,
    pub query: Option<QueryId>,
}

impl SparseDoc {
    /// Builds a document, merging repeated terms and dropping zero counts.
    pub fn new(id: impl Into<String>, terms: impl IntoIterator<Item = (TermId, u32)>) -> Self {
        let mut terms: Vec<(TermId, u32)> = terms.into_iter().filter(|&(_, tf)| tf > 0).collect();
        terms.sort_unstable_by_key(|&(t, _)| t);
        terms.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        Self {
            id: id.into(),
            terms,
            label: None,
            query: None,
        }
    }

    pub fn with_label(mut self, label: Category) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_query(mut self, query: QueryId) -> Self {
        self.query = Some(query);
        self
    }

    pub fn terms(&self) -> &[(TermId, u32)] {
        &self.terms
    }

    pub fn tf(&self, term: TermId) -> u32 {
        self.terms
            .binary_search_by_key(&term, |&(t, _)| t)
            .map_or(0, |i| self.terms[i].1)
    }

    /// Token count ℓ = Σ tf.
    pub fn length(&self) -> u64 {
        self.terms.iter().map(|&(_, tf)| u64::from(tf)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Term-wise sum of two documents.
    pub fn concat(&self, other: &SparseDoc, id: impl Into<String>) -> SparseDoc {
        SparseDoc::new(id, self.terms.iter().chain(&other.terms).copied())
    }
}

/// Documents retrieved for one query plus the indices of its assessed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    pub query_id: QueryId,
    docs: Vec<SparseDoc>,
    validation: Vec<usize>,
}

impl ResultSet {
    pub fn new(query_id: impl Into<QueryId>, docs: Vec<SparseDoc>) -> Self {
        Self {
            query_id: query_id.into(),
            docs,
            validation: Vec::new(),
        }
    }

    pub fn docs(&self) -> &[SparseDoc] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.docs.iter().map(|d| d.id.as_str())
    }

    pub fn validation_indices(&self) -> &[usize] {
        &self.validation
    }

    pub fn validation_docs(&self) -> impl Iterator<Item = &SparseDoc> {
        self.validation.iter().map(|&i| &self.docs[i])
    }

    pub fn validation_ids(&self) -> impl Iterator<Item = &str> {
        self.validation_docs().map(|d| d.id.as_str())
    }

    /// Replaces the validation sample. Indices must be in range, distinct,
    /// and point at labeled documents.
    pub fn set_validation(&mut self, mut indices: Vec<usize>) -> Result<(), CorpusError> {
        indices.sort_unstable();
        indices.dedup();
        for &i in &indices {
            let doc = self.docs.get(i).ok_or(CorpusError::ValidationOutOfRange {
                index: i,
                len: self.docs.len(),
            })?;
            if doc.label.is_none() {
                return Err(CorpusError::UnlabeledValidation(doc.id.clone()));
            }
        }
        self.validation = indices;
        Ok(())
    }

    /// Draws a uniform validation sample of size `min(⌈√|D_q|/σ⌉, |D_q|)`.
    pub fn sample_validation(&mut self, sigma: f64, seed: u64) -> Result<(), CorpusError> {
        let k = validation_size(self.docs.len(), sigma)?;
        self.set_validation(sample_indices(self.docs.len(), k, seed))
    }

    /// Whether every document carries a gold label.
    pub fn fully_labeled(&self) -> bool {
        self.docs.iter().all(|d| d.label.is_some())
    }

    pub fn labeled_indices(&self) -> Vec<usize> {
        (0..self.docs.len())
            .filter(|&i| self.docs[i].label.is_some())
            .collect()
    }

    /// Gold category counts over all documents (unlabeled ones are skipped).
    pub fn gold_counts(&self) -> [u64; 6] {
        let mut counts = [0u64; 6];
        for label in self.docs.iter().filter_map(|d| d.label) {
            counts[label.index()] += 1;
        }
        counts
    }
}

/// A collection of result sets sharing one term dictionary.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub dictionary: TermDictionary,
    pub result_sets: Vec<ResultSet>,
    /// Documents without a query assignment.
    pub loose: Vec<SparseDoc>,
}

impl Corpus {
    pub fn documents(&self) -> impl Iterator<Item = &SparseDoc> {
        self.result_sets
            .iter()
            .flat_map(|rs| rs.docs.iter())
            .chain(self.loose.iter())
    }

    pub fn document_count(&self) -> usize {
        self.result_sets.iter().map(ResultSet::len).sum::<usize>() + self.loose.len()
    }

    pub fn result_set(&self, query_id: &str) -> Option<&ResultSet> {
        self.result_sets.iter().find(|rs| &*rs.query_id == query_id)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_tags_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.tag().parse::<Category>().unwrap(), c);
        }
        assert!("pos".parse::<Category>().is_err());
        assert_eq!(Category::ALL.iter().filter(|c| c.is_relevant()).count(), 5);
    }

    #[test]
    fn sparse_doc_merges_and_drops_zero() {
        let d = SparseDoc::new("d", [(TermId(3), 1), (TermId(1), 2), (TermId(3), 4), (TermId(7), 0)]);
        assert_eq!(d.terms(), &[(TermId(1), 2), (TermId(3), 5)]);
        assert_eq!(d.length(), 7);
        assert_eq!(d.tf(TermId(3)), 5);
        assert_eq!(d.tf(TermId(7)), 0);
    }

    #[test]
    fn empty_doc_is_allowed() {
        let d = SparseDoc::new("e", []);
        assert!(d.is_empty());
        assert_eq!(d.length(), 0);
    }

    #[test]
    fn validation_rejects_unlabeled_docs() {
        let docs = vec![
            SparseDoc::new("a", [(TermId(0), 1)]).with_label(Category::Positive),
            SparseDoc::new("b", [(TermId(0), 1)]),
        ];
        let mut rs = ResultSet::new("q", docs);
        assert!(rs.set_validation(vec![0]).is_ok());
        assert!(matches!(
            rs.set_validation(vec![1]),
            Err(CorpusError::UnlabeledValidation(_))
        ));
        assert!(matches!(
            rs.set_validation(vec![5]),
            Err(CorpusError::ValidationOutOfRange { .. })
        ));
    }
}
