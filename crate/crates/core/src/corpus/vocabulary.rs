use serde::{Deserialize, Serialize};

use super::{Category, CorpusError, SparseDoc, TermId};

/// Accumulates per-category term counts. Merging is commutative, so partial
/// builders from any split of the training documents combine to the same result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VocabularyBuilder {
    term_freq: [Vec<u64>; 6],
    category_tokens: [u64; 6],
    category_docs: [u64; 6],
}

impl VocabularyBuilder {
    pub fn new(dict_len: usize) -> Self {
        Self {
            term_freq: std::array::from_fn(|_| vec![0; dict_len]),
            category_tokens: [0; 6],
            category_docs: [0; 6],
        }
    }

    fn ensure_len(&mut self, len: usize) {
        for row in &mut self.term_freq {
            if row.len() < len {
                row.resize(len, 0);
            }
        }
    }

    /// Adds a labeled document; unlabeled ones are ignored.
    pub fn add(&mut self, doc: &SparseDoc) {
        let Some(label) = doc.label else { return };
        if let Some(&(last, _)) = doc.terms().last() {
            self.ensure_len(last.index() + 1);
        }
        let c = label.index();
        let row = &mut self.term_freq[c];
        for &(t, tf) in doc.terms() {
            row[t.index()] += u64::from(tf);
            self.category_tokens[c] += u64::from(tf);
        }
        self.category_docs[c] += 1;
    }

    pub fn merge(&mut self, other: &VocabularyBuilder) {
        self.ensure_len(other.term_freq[0].len());
        for c in 0..6 {
            for (a, b) in self.term_freq[c].iter_mut().zip(&other.term_freq[c]) {
                *a += b;
            }
            self.category_tokens[c] += other.category_tokens[c];
            self.category_docs[c] += other.category_docs[c];
        }
    }

    pub fn document_count(&self) -> u64 {
        self.category_docs.iter().sum()
    }

    pub fn build(&self, smoothing: f64) -> Result<Vocabulary, CorpusError> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(CorpusError::InvalidSmoothing(smoothing));
        }
        if self.document_count() == 0 {
            return Err(CorpusError::EmptyTrainingSet);
        }
        let len = self.term_freq[0].len();
        let collection: Vec<u64> = (0..len)
            .map(|i| self.term_freq.iter().map(|row| row[i]).sum())
            .collect();
        let known_terms = collection.iter().filter(|&&n| n > 0).count();
        Ok(Vocabulary {
            term_freq: self.term_freq.clone(),
            category_tokens: self.category_tokens,
            category_docs: self.category_docs,
            total_tokens: self.category_tokens.iter().sum(),
            collection,
            known_terms,
            smoothing,
        })
    }
}

/// Term statistics of a labeled training sample over a fixed term dictionary.
///
/// The vocabulary proper is the set of terms occurring at least once in the
/// sample; its size is what additive smoothing scales with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    term_freq: [Vec<u64>; 6],
    category_tokens: [u64; 6],
    category_docs: [u64; 6],
    total_tokens: u64,
    collection: Vec<u64>,
    known_terms: usize,
    smoothing: f64,
}

impl Vocabulary {
    /// `f_{i,c}`.
    pub fn term_freq(&self, term: TermId, c: Category) -> u64 {
        self.term_freq[c.index()].get(term.index()).copied().unwrap_or(0)
    }

    /// `L_c`.
    pub fn category_tokens(&self, c: Category) -> u64 {
        self.category_tokens[c.index()]
    }

    pub fn category_docs(&self, c: Category) -> u64 {
        self.category_docs[c.index()]
    }

    /// `L`.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn collection_count(&self, term: TermId) -> u64 {
        self.collection.get(term.index()).copied().unwrap_or(0)
    }

    pub fn is_known(&self, term: TermId) -> bool {
        self.collection_count(term) > 0
    }

    /// Number of distinct terms in the training sample.
    pub fn size(&self) -> usize {
        self.known_terms
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// Length of the underlying term-id space.
    pub fn id_space(&self) -> usize {
        self.collection.len()
    }

    pub fn known_terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.collection
            .iter()
            .enumerate()
            .filter(|(_, &n)| n > 0)
            .map(|(i, _)| TermId(i as u32))
    }

    /// Smoothed collection distribution `π_i = (n_i + s) / (L + s·|V|)`; 0 for unknown terms.
    pub fn pi(&self, term: TermId) -> f64 {
        let n = self.collection_count(term);
        if n == 0 {
            return 0.0;
        }
        (n as f64 + self.smoothing) / (self.total_tokens as f64 + self.smoothing * self.known_terms as f64)
    }
}

/// Counts term statistics over the labeled documents in `docs`.
pub fn build_vocabulary<'a>(
    docs: impl IntoIterator<Item = &'a SparseDoc>,
    dict_len: usize,
    smoothing: f64,
) -> Result<Vocabulary, CorpusError> {
    let mut builder = VocabularyBuilder::new(dict_len);
    for doc in docs {
        builder.add(doc);
    }
    builder.build(smoothing)
}
