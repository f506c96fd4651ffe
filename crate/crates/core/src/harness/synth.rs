//! Seeded synthetic corpora shaped like a large query-partitioned collection.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Poisson, WeightedAliasIndex};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF, Normal};

use super::{derive_seed, HarnessError};
use crate::corpus::{Category, Corpus, QueryId, ResultSet, SparseDoc, TermDictionary, TermId};

/// Rate bounds and target mean for one category across queries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRange {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl RateRange {
    pub fn fixed(rate: f64) -> Self {
        Self {
            min: rate,
            max: rate,
            mean: rate,
        }
    }

    fn validate(&self, name: &str) -> Result<(), HarnessError> {
        let ok = (0.0..=1.0).contains(&self.min)
            && (0.0..=1.0).contains(&self.max)
            && self.min <= self.mean
            && self.mean <= self.max;
        if ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidSpec(format!(
                "{name} rate range needs 0 <= min <= mean <= max <= 1, got {self:?}"
            )))
        }
    }

    /// `count` stratified quantiles of a Beta law rescaled to `[min, max]` with the target mean.
    fn stratified(&self, count: usize) -> Vec<f64> {
        if self.max - self.min < 1e-12 {
            return vec![self.min; count];
        }
        let m = ((self.mean - self.min) / (self.max - self.min)).clamp(0.02, 0.98);
        let concentration = 4.0;
        let beta = Beta::new(m * concentration, (1.0 - m) * concentration).expect("positive shape parameters");
        (0..count)
            .map(|i| self.min + (self.max - self.min) * beta.inverse_cdf((i as f64 + 0.5) / count as f64))
            .collect()
    }
}

/// How the negative rate of a query is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NegativeRates {
    /// Drawn from `negative_rate`; the remainder goes to M, X, O and NR.
    Independent,
    /// `1 − P`: every document is P or N.
    Complement,
}

/// Classifier difficulty: the share of sentiment-bearing tokens in polar
/// documents and how often they come from the opposite polarity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    /// Probability that a token of a P, N or M document is a sentiment word.
    pub signal: f64,
    /// Probability that a sentiment word is drawn from the opposite polarity.
    pub crosstalk: f64,
}

impl Divergence {
    pub const PRESETS: [&'static str; 4] = ["separable", "easy", "medium", "hard"];

    /// Named presets. `separable` gives disjoint category vocabularies.
    pub fn preset(name: &str) -> Option<Self> {
        let (signal, crosstalk) = match name {
            "separable" => (1.0, 0.0),
            "easy" => (0.5, 0.05),
            "medium" => (0.3, 0.2),
            "hard" => (0.2, 0.35),
            _ => return None,
        };
        Some(Self { signal, crosstalk })
    }
}

/// Block sizes of the generated vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VocabSpec {
    /// Topic words used by every category.
    pub shared: usize,
    /// Words specific to each of P, N, X, O and NR.
    pub per_category: usize,
    /// Zipf exponent of word frequencies within a block.
    pub zipf: f64,
}

impl Default for VocabSpec {
    fn default() -> Self {
        Self {
            shared: 3000,
            per_category: 600,
            zipf: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub queries: usize,
    pub size_median: f64,
    pub size_mean: f64,
    pub min_size: u64,
    pub positive_rate: RateRange,
    pub negative_rate: RateRange,
    pub negative_rates: NegativeRates,
    /// Largest allowed `P + N` per query under independent rates.
    pub max_polar_rate: f64,
    /// Base split of the non-polar remainder over M, X, O, NR.
    pub remainder_split: [f64; 4],
    pub vocabulary: VocabSpec,
    pub divergence: Divergence,
    pub mean_doc_length: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    /// 29 queries, median 30,741 and mean 105,564 documents per result set,
    /// P rates in [5.9%, 44.8%] averaging 20.8%, N rates in [11.2%, 66.8%]
    /// averaging 36.9%.
    fn default() -> Self {
        Self {
            queries: 29,
            size_median: 30_741.0,
            size_mean: 105_564.0,
            min_size: 10,
            positive_rate: RateRange {
                min: 0.059,
                max: 0.448,
                mean: 0.208,
            },
            negative_rate: RateRange {
                min: 0.112,
                max: 0.668,
                mean: 0.369,
            },
            negative_rates: NegativeRates::Independent,
            max_polar_rate: 0.95,
            remainder_split: [0.15, 0.35, 0.10, 0.40],
            vocabulary: VocabSpec::default(),
            divergence: Divergence::preset("medium").expect("preset exists"),
            mean_doc_length: 12.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Same shape with result sets scaled by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        self.size_median *= factor;
        self.size_mean *= factor;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::InvalidSpec(m));
        if self.queries == 0 {
            return invalid("at least one query is required".into());
        }
        if !(self.size_median >= 1.0 && self.size_mean >= self.size_median && self.size_mean.is_finite()) {
            return invalid(format!(
                "need 1 <= median <= mean, got median {} and mean {}",
                self.size_median, self.size_mean
            ));
        }
        self.positive_rate.validate("positive")?;
        if self.negative_rates == NegativeRates::Independent {
            self.negative_rate.validate("negative")?;
            if self.positive_rate.min + self.negative_rate.min > self.max_polar_rate.min(1.0) {
                return Err(HarnessError::InfeasibleRates(format!(
                    "minimum P rate {} plus minimum N rate {} exceeds {}",
                    self.positive_rate.min, self.negative_rate.min, self.max_polar_rate
                )));
            }
        }
        if self.remainder_split.iter().any(|&w| !(w > 0.0)) {
            return invalid("remainder split weights must be positive".into());
        }
        let d = self.divergence;
        if !((0.0..=1.0).contains(&d.signal) && (0.0..=1.0).contains(&d.crosstalk)) {
            return invalid(format!("divergence values must lie in [0, 1], got {d:?}"));
        }
        if d.signal < 1.0 && self.vocabulary.shared == 0 {
            return invalid("a shared vocabulary block is needed when signal < 1".into());
        }
        if self.vocabulary.per_category == 0 || !(self.vocabulary.zipf >= 0.0) {
            return invalid("category blocks must be non-empty with a non-negative Zipf exponent".into());
        }
        if !(self.mean_doc_length >= 1.0) {
            return invalid("mean document length must be at least 1".into());
        }
        Ok(())
    }
}

/// Realized shape of a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthStats {
    pub documents: u64,
    pub size_median: f64,
    pub size_mean: f64,
    pub positive_rate_mean: f64,
    pub negative_rate_mean: f64,
}

impl SynthStats {
    pub fn of(corpus: &Corpus) -> Self {
        let mut sizes: Vec<f64> = corpus.result_sets.iter().map(|rs| rs.len() as f64).collect();
        sizes.sort_by(f64::total_cmp);
        let q = sizes.len();
        let median = if q == 0 {
            0.0
        } else if q % 2 == 1 {
            sizes[q / 2]
        } else {
            (sizes[q / 2 - 1] + sizes[q / 2]) / 2.0
        };
        let rate = |c: Category| {
            corpus
                .result_sets
                .iter()
                .map(|rs| rs.gold_counts()[c.index()] as f64 / rs.len().max(1) as f64)
                .sum::<f64>()
                / q.max(1) as f64
        };
        Self {
            documents: corpus.document_count() as u64,
            size_median: median,
            size_mean: sizes.iter().sum::<f64>() / q.max(1) as f64,
            positive_rate_mean: rate(Category::Positive),
            negative_rate_mean: rate(Category::Negative),
        }
    }
}

/// Result-set sizes at stratified quantiles of a log-normal whose spread is
/// calibrated so that the sizes' mean hits the target.
fn stratified_sizes(spec: &SynthSpec) -> Vec<u64> {
    let q = spec.queries;
    let z: Vec<f64> = {
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (0..q).map(|i| normal.inverse_cdf((i as f64 + 0.5) / q as f64)).collect()
    };
    let mu = spec.size_median.ln();
    let mean_for = |sigma: f64| z.iter().map(|zi| (mu + sigma * zi).exp()).sum::<f64>() / q as f64;
    let sigma = if spec.size_mean <= spec.size_median || q < 2 {
        0.0
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while mean_for(hi) < spec.size_mean && hi < 20.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mean_for(mid) < spec.size_mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    z.iter()
        .map(|zi| ((mu + sigma * zi).exp().round() as u64).max(spec.min_size).max(1))
        .collect()
}

/// Pairs P and N rates so that every query keeps `P + N <= cap`.
fn pair_rates(p: &[f64], n: &mut [f64], cap: f64, rng: &mut ChaCha8Rng) -> Result<(), HarnessError> {
    for _ in 0..1000 {
        if p.iter().zip(n.iter()).all(|(a, b)| a + b <= cap + 1e-12) {
            return Ok(());
        }
        n.shuffle(rng);
    }
    // Largest P with smallest N.
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let mut sorted_n = n.to_vec();
    sorted_n.sort_by(f64::total_cmp);
    for (k, &i) in order.iter().enumerate() {
        n[i] = sorted_n[k];
    }
    if p.iter().zip(n.iter()).all(|(a, b)| a + b <= cap + 1e-12) {
        Ok(())
    } else {
        Err(HarnessError::InfeasibleRates(format!(
            "no pairing of positive and negative rates keeps P + N <= {cap}"
        )))
    }
}

/// Integer counts summing to `n` that follow `rates` (largest remainder).
fn apportion(rates: &[f64; 6], n: u64) -> [u64; 6] {
    let total: f64 = rates.iter().sum();
    let exact: Vec<f64> = rates.iter().map(|r| r / total * n as f64).collect();
    let mut counts = [0u64; 6];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as u64;
    }
    let mut left = n - counts.iter().sum::<u64>();
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts
}

struct Block {
    ids: Vec<TermId>,
    sampler: WeightedAliasIndex<f64>,
}

impl Block {
    fn new(ids: Vec<TermId>, zipf: f64) -> Self {
        let weights: Vec<f64> = (0..ids.len()).map(|r| 1.0 / ((r + 1) as f64).powf(zipf)).collect();
        let sampler = WeightedAliasIndex::new(weights).expect("non-empty block with positive weights");
        Self { ids, sampler }
    }

    #[inline]
    fn draw(&self, rng: &mut ChaCha8Rng) -> TermId {
        self.ids[self.sampler.sample(rng)]
    }
}

struct Vocabulary {
    dictionary: TermDictionary,
    shared: Option<Block>,
    /// Indexed like [`Category::index`].
    own: Vec<Block>,
}

const BLOCK_PREFIX: [&str; 6] = ["pos", "neg", "", "neu", "oth", "nrl"];

fn build_vocabulary(spec: &VocabSpec) -> Vocabulary {
    let mut names: Vec<String> = (0..spec.shared).map(|i| format!("top{i:05}")).collect();
    for prefix in BLOCK_PREFIX.iter().filter(|p| !p.is_empty()) {
        names.extend((0..spec.per_category).map(|i| format!("{prefix}{i:05}")));
    }
    names.sort();
    let dictionary = TermDictionary::from_terms(names).expect("generated names are distinct");
    let block = |prefix: &str, len: usize| {
        let ids = (0..len)
            .map(|i| dictionary.get(&format!("{prefix}{i:05}")).expect("generated term"))
            .collect();
        Block::new(ids, spec.zipf)
    };
    let shared = (spec.shared > 0).then(|| block("top", spec.shared));
    let own = BLOCK_PREFIX
        .iter()
        .map(|p| {
            // M documents draw from the P and N blocks; this slot is unused.
            let prefix = if p.is_empty() { "pos" } else { p };
            block(prefix, spec.per_category)
        })
        .collect();
    Vocabulary { dictionary, shared, own }
}

fn draw_doc(
    vocab: &Vocabulary,
    spec: &SynthSpec,
    label: Category,
    length: u64,
    rng: &mut ChaCha8Rng,
) -> Vec<(TermId, u32)> {
    let d = spec.divergence;
    let mut terms = Vec::with_capacity(length as usize);
    for _ in 0..length {
        let signal = vocab.shared.is_none() || rng.gen::<f64>() < d.signal;
        let term = if !signal {
            vocab.shared.as_ref().expect("shared block").draw(rng)
        } else {
            let block = match label {
                Category::Positive | Category::Negative => {
                    let flip = rng.gen::<f64>() < d.crosstalk;
                    match (label, flip) {
                        (Category::Positive, false) | (Category::Negative, true) => Category::Positive,
                        _ => Category::Negative,
                    }
                }
                Category::Mixed => {
                    if rng.gen::<bool>() {
                        Category::Positive
                    } else {
                        Category::Negative
                    }
                }
                other => other,
            };
            vocab.own[block.index()].draw(rng)
        };
        terms.push((term, 1));
    }
    terms
}

/// Generates a fully labeled corpus. Each query's documents come from their
/// own RNG stream, so a query's content does not depend on the others.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(Corpus, SynthStats), HarnessError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut sizes = stratified_sizes(spec);
    sizes.shuffle(&mut rng);
    let mut p_rates = spec.positive_rate.stratified(spec.queries);
    p_rates.shuffle(&mut rng);
    let n_rates: Vec<f64> = match spec.negative_rates {
        NegativeRates::Complement => p_rates.iter().map(|p| 1.0 - p).collect(),
        NegativeRates::Independent => {
            let mut n = spec.negative_rate.stratified(spec.queries);
            n.shuffle(&mut rng);
            pair_rates(&p_rates, &mut n, spec.max_polar_rate, &mut rng)?;
            n
        }
    };

    let vocab = build_vocabulary(&spec.vocabulary);
    let length = Poisson::new(spec.mean_doc_length - 1.0).ok();
    let width = (spec.queries as f64).log10().floor() as usize + 1;

    let mut result_sets = Vec::with_capacity(spec.queries);
    for q in 0..spec.queries {
        let query_id: QueryId = Arc::from(format!("q{:0width$}", q + 1).as_str());
        let mut qrng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, &query_id));
        let n = sizes[q];
        let (p, neg) = (p_rates[q], n_rates[q]);
        let rest = (1.0 - p - neg).max(0.0);
        let split: Vec<f64> = if rest > 0.0 {
            let alpha: Vec<f64> = spec.remainder_split.iter().map(|w| w * 20.0).collect();
            Dirichlet::new(&alpha).expect("positive concentration").sample(&mut qrng)
        } else {
            vec![0.0; 4]
        };
        let rates = [p, neg, rest * split[0], rest * split[1], rest * split[2], rest * split[3]];
        let counts = apportion(&rates, n);

        let mut labels: Vec<Category> = Category::ALL
            .iter()
            .flat_map(|&c| std::iter::repeat(c).take(counts[c.index()] as usize))
            .collect();
        labels.shuffle(&mut qrng);

        let digits = (n as f64).log10().floor() as usize + 1;
        let docs = labels
            .into_iter()
            .enumerate()
            .map(|(i, label)| {
                let len = 1 + length.map_or(0, |l| l.sample(&mut qrng) as u64);
                let terms = draw_doc(&vocab, spec, label, len, &mut qrng);
                SparseDoc::new(format!("{query_id}-{i:0digits$}"), terms)
                    .with_label(label)
                    .with_query(query_id.clone())
            })
            .collect();
        result_sets.push(ResultSet::new(query_id, docs));
    }

    let corpus = Corpus {
        dictionary: vocab.dictionary,
        result_sets,
        loose: Vec::new(),
    };
    let stats = SynthStats::of(&corpus);
    Ok((corpus, stats))
}
