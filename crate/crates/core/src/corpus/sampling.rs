use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Category, CorpusError, ResultSet, SparseDoc};

/// `min(⌈√n/σ⌉, n)`.
pub fn validation_size(n: usize, sigma: f64) -> Result<usize, CorpusError> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(CorpusError::InvalidSigma(sigma));
    }
    let k = ((n as f64).sqrt() / sigma).ceil() as usize;
    Ok(k.min(n))
}

/// Draws `k` distinct indices from `0..len` uniformly, returned sorted.
///
/// The draw is a forward partial Fisher–Yates shuffle, so for a fixed seed the
/// sample of size `k` contains the sample of every smaller size.
pub fn sample_indices(len: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut sample = sample_order(len, k, seed);
    sample.sort_unstable();
    sample
}

/// The indices of [`sample_indices`] in draw order: its first `j` entries are
/// the sample of size `j`.
pub fn sample_order(len: usize, k: usize, seed: u64) -> Vec<usize> {
    let k = k.min(len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..len).collect();
    for i in 0..k {
        let j = rng.gen_range(i..len);
        perm.swap(i, j);
    }
    perm.truncate(k);
    perm
}

/// Category counts over a labeled sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRates {
    pub counts: [u64; 6],
    pub total: u64,
}

impl CategoryRates {
    /// Counts the labels of `docs`; unlabeled documents are ignored.
    pub fn from_docs<'a>(docs: impl IntoIterator<Item = &'a SparseDoc>) -> Self {
        let mut rates = CategoryRates::default();
        for label in docs.into_iter().filter_map(|d| d.label) {
            rates.counts[label.index()] += 1;
            rates.total += 1;
        }
        rates
    }

    pub fn count(&self, c: Category) -> u64 {
        self.counts[c.index()]
    }

    /// `|c ∩ V| / |V|`, or 0 for an empty sample.
    pub fn rate(&self, c: Category) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.counts[c.index()] as f64 / self.total as f64
        }
    }

    pub fn rates(&self) -> [f64; 6] {
        Category::ALL.map(|c| self.rate(c))
    }

    /// Rates of the categories that occur in the sample.
    pub fn to_map(&self) -> BTreeMap<Category, f64> {
        Category::ALL
            .into_iter()
            .filter(|&c| self.count(c) > 0)
            .map(|c| (c, self.rate(c)))
            .collect()
    }
}

/// Category rates over the validation sample of `rs`.
pub fn category_rates(rs: &ResultSet) -> Result<CategoryRates, CorpusError> {
    if rs.validation_indices().is_empty() {
        return Err(CorpusError::EmptyValidation(rs.query_id.to_string()));
    }
    Ok(CategoryRates::from_docs(rs.validation_docs()))
}
