use crate::corpus::{SparseDoc, TermId};
use crate::stats::CompensatedSum;

/// Per-term weights for the two polar categories over a dense term-id space.
///
/// Terms absent from training are unknown and contribute nothing to a score.
#[derive(Debug, Clone, PartialEq)]
pub struct TermWeights {
    known: Vec<bool>,
    positive: Vec<f64>,
    negative: Vec<f64>,
}

impl TermWeights {
    pub fn new(id_space: usize) -> Self {
        Self {
            known: vec![false; id_space],
            positive: vec![0.0; id_space],
            negative: vec![0.0; id_space],
        }
    }

    pub fn set(&mut self, term: TermId, positive: f64, negative: f64) {
        let i = term.index();
        if i >= self.known.len() {
            self.known.resize(i + 1, false);
            self.positive.resize(i + 1, 0.0);
            self.negative.resize(i + 1, 0.0);
        }
        self.known[i] = true;
        self.positive[i] = positive;
        self.negative[i] = negative;
    }

    /// `(w_P, w_N)` for a known term.
    pub fn get(&self, term: TermId) -> Option<(f64, f64)> {
        let i = term.index();
        (i < self.known.len() && self.known[i]).then(|| (self.positive[i], self.negative[i]))
    }

    pub fn known_terms(&self) -> impl Iterator<Item = TermId> + '_ {
        self.known
            .iter()
            .enumerate()
            .filter(|(_, &k)| k)
            .map(|(i, _)| TermId(i as u32))
    }

    pub fn len(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.known.iter().any(|&k| k)
    }

    /// `(Σ tf·w_P, Σ tf·w_N)` over the known terms of `doc`.
    #[inline]
    pub fn score(&self, doc: &SparseDoc) -> (f64, f64) {
        let (mut p, mut n) = (0.0, 0.0);
        for &(t, tf) in doc.terms() {
            let i = t.index();
            if i < self.known.len() {
                let tf = f64::from(tf);
                p += tf * self.positive[i];
                n += tf * self.negative[i];
            }
        }
        (p, n)
    }

    /// The same sums evaluated from aggregated term counts.
    pub fn score_totals(&self, totals: &TermTotals) -> (f64, f64) {
        let mut p = CompensatedSum::new();
        let mut n = CompensatedSum::new();
        for (i, &count) in totals.counts.iter().enumerate().take(self.known.len()) {
            if count > 0 && self.known[i] {
                let c = count as f64;
                p.add(c * self.positive[i]);
                n.add(c * self.negative[i]);
            }
        }
        (p.value(), n.value())
    }
}

/// Summed term frequencies of a document set.
///
/// For models whose measures are linear in term counts, `μ_c(D)` can be
/// evaluated from these totals alone.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TermTotals {
    counts: Vec<u64>,
    docs: u64,
}

impl TermTotals {
    pub fn new(id_space: usize) -> Self {
        Self {
            counts: vec![0; id_space],
            docs: 0,
        }
    }

    pub fn from_docs<'a>(id_space: usize, docs: impl IntoIterator<Item = &'a SparseDoc>) -> Self {
        let mut totals = Self::new(id_space);
        for doc in docs {
            totals.add(doc);
        }
        totals
    }

    pub fn add(&mut self, doc: &SparseDoc) {
        if let Some(&(last, _)) = doc.terms().last() {
            if last.index() >= self.counts.len() {
                self.counts.resize(last.index() + 1, 0);
            }
        }
        for &(t, tf) in doc.terms() {
            self.counts[t.index()] += u64::from(tf);
        }
        self.docs += 1;
    }

    pub fn count(&self, term: TermId) -> u64 {
        self.counts.get(term.index()).copied().unwrap_or(0)
    }

    pub fn docs(&self) -> u64 {
        self.docs
    }
}
