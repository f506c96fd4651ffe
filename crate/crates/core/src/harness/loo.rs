//! Leave-one-query-out evaluation.

use std::collections::HashSet;

use log::{debug, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{derive_seed, HarnessError};
use crate::classifiers::{
    mu_set, mu_set_par, mu_totals, train, ClassifierKind, CumulativeClassifier, CumulativeScore, Model, TermTotals,
    TrainParams,
};
use crate::corpus::{
    build_vocabulary, sample_order, validation_size, Category, CategoryRates, Corpus, ResultSet, SparseDoc,
};
use crate::quantifier::{
    adjusted_classify_and_count, classify_and_count, estimate_confusion, fit_item_driven, fit_query_driven, predict,
    FeatureSpec, ItemRow, Method, QuantEstimate, QuantMethod, QueryRow, MAX_CONDITION,
};

/// Smallest σ used when it is estimated from the data.
const MIN_SIGMA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooConfig {
    pub classifiers: Vec<ClassifierKind>,
    pub quantifiers: Vec<QuantMethod>,
    pub train: TrainParams,
    /// Query-driven features as shares of `μ_P + μ_N` with rate targets.
    pub normalize: bool,
    /// Append `|D_q|` to the query-driven features.
    pub include_size: bool,
    /// Fixed σ for validation sample sizes; estimated per fold when absent.
    pub sigma: Option<f64>,
    pub max_condition: f64,
    pub seed: u64,
}

impl Default for LooConfig {
    fn default() -> Self {
        Self {
            classifiers: ClassifierKind::ALL.to_vec(),
            quantifiers: QuantMethod::ALL.to_vec(),
            train: TrainParams::default(),
            normalize: true,
            include_size: false,
            sigma: None,
            max_condition: MAX_CONDITION,
            seed: 0,
        }
    }
}

impl LooConfig {
    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec::query_driven(self.normalize, self.include_size)
    }

    pub fn methods(&self) -> Vec<Method> {
        self.classifiers
            .iter()
            .flat_map(|&c| self.quantifiers.iter().map(move |&q| Method::new(c, q)))
            .collect()
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.classifiers.is_empty() || self.quantifiers.is_empty() {
            return Err(HarnessError::InvalidConfig("at least one classifier and one quantifier".into()));
        }
        if let Some(s) = self.sigma {
            validation_size(1, s)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldStatus {
    Ok,
    /// Some methods failed.
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<QuantEstimate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMeasure {
    pub classifier: ClassifierKind,
    /// `μ_P(D_q)` and `μ_N(D_q)` under the fold's model.
    pub score: CumulativeScore,
}

/// One held-out query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooRun {
    pub query_id: String,
    /// `|D_q|`.
    pub size: u64,
    pub sigma: f64,
    /// Size of the held-out validation sample `V_q`.
    pub evaluated: u64,
    pub training_queries: Vec<String>,
    /// Labeled P and N documents the classifiers were trained on.
    pub training_docs: u64,
    /// Training inputs dropped because they also belong to `V_q`.
    pub excluded_docs: u64,
    /// Held-out evaluated documents found among the training inputs; always 0.
    pub leaked_docs: u64,
    /// Category counts over `V_q`.
    pub observed: CategoryRates,
    pub measures: Vec<ClassifierMeasure>,
    pub outcomes: Vec<MethodOutcome>,
    pub status: FoldStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl LooRun {
    pub fn outcome(&self, method: Method) -> Option<&MethodOutcome> {
        self.outcomes.iter().find(|o| o.method == method)
    }

    pub fn measure(&self, classifier: ClassifierKind) -> Option<&CumulativeScore> {
        self.measures.iter().find(|m| m.classifier == classifier).map(|m| &m.score)
    }
}

/// Observed P and N shares comparable to what `quantifier` estimates.
///
/// Query-driven models are fitted on `P + M` and `N + M`, so their shares are
/// `(P+M) / (P+N+2M)`; the other methods estimate `P / (P+N)`.
pub fn observed_shares(observed: &CategoryRates, quantifier: QuantMethod) -> Option<(f64, f64)> {
    let (p, n, m) = (
        observed.rate(Category::Positive),
        observed.rate(Category::Negative),
        observed.rate(Category::Mixed),
    );
    let (p, n) = match quantifier {
        QuantMethod::QueryDriven => (p + m, n + m),
        _ => (p, n),
    };
    (p + n > 0.0).then(|| (p / (p + n), n / (p + n)))
}

/// How a result set's evaluated sample is drawn.
enum Evaluation {
    /// Fully labeled: uniform nested samples in this draw order.
    Sampled(Vec<usize>),
    /// Partially labeled: the labeled documents.
    Labeled(Vec<usize>),
}

struct Context<'c> {
    corpus: &'c Corpus,
    config: &'c LooConfig,
    evaluation: Vec<Evaluation>,
    pilot: Vec<Option<CategoryRates>>,
    totals: Vec<TermTotals>,
    /// Ids that occur in more than one result set.
    shared_ids: HashSet<&'c str>,
}

impl<'c> Context<'c> {
    fn new(corpus: &'c Corpus, config: &'c LooConfig) -> Result<Self, HarnessError> {
        let min_sigma = config.sigma.map_or(MIN_SIGMA, |s| s.min(MIN_SIGMA));
        let mut evaluation = Vec::with_capacity(corpus.result_sets.len());
        let mut pilot = Vec::with_capacity(corpus.result_sets.len());
        for rs in &corpus.result_sets {
            let e = if rs.fully_labeled() {
                let k = validation_size(rs.len(), min_sigma)?;
                Evaluation::Sampled(sample_order(rs.len(), k, derive_seed(config.seed, &rs.query_id)))
            } else {
                Evaluation::Labeled(rs.labeled_indices())
            };
            let p = match &e {
                Evaluation::Sampled(order) => {
                    let k = validation_size(rs.len(), 1.0)?;
                    Some(CategoryRates::from_docs(order[..k].iter().map(|&i| &rs.docs()[i])))
                }
                Evaluation::Labeled(idx) if !idx.is_empty() => {
                    Some(CategoryRates::from_docs(idx.iter().map(|&i| &rs.docs()[i])))
                }
                Evaluation::Labeled(_) => None,
            };
            evaluation.push(e);
            pilot.push(p);
        }

        let dict_len = corpus.dictionary.len();
        let totals = corpus
            .result_sets
            .par_iter()
            .map(|rs| TermTotals::from_docs(dict_len, rs.docs()))
            .collect();

        let mut ids: Vec<(&str, usize)> = corpus
            .result_sets
            .iter()
            .enumerate()
            .flat_map(|(q, rs)| rs.doc_ids().map(move |id| (id, q)))
            .collect();
        ids.par_sort_unstable();
        let shared_ids = ids
            .windows(2)
            .filter(|w| w[0].0 == w[1].0 && w[0].1 != w[1].1)
            .map(|w| w[0].0)
            .collect();

        Ok(Self {
            corpus,
            config,
            evaluation,
            pilot,
            totals,
            shared_ids,
        })
    }

    fn sigma_for(&self, held_out: usize) -> f64 {
        if let Some(s) = self.config.sigma {
            return s;
        }
        let rates: Vec<&CategoryRates> = self
            .pilot
            .iter()
            .enumerate()
            .filter(|&(q, _)| q != held_out)
            .filter_map(|(_, p)| p.as_ref())
            .collect();
        let sd = |c: Category| sample_std(rates.iter().map(|r| r.rate(c)));
        let sigma = sd(Category::Positive).min(sd(Category::Negative));
        if sigma.is_finite() {
            sigma.clamp(MIN_SIGMA, 1.0)
        } else {
            1.0
        }
    }

    /// Evaluated document indices of query `q` under `sigma`, ascending.
    fn evaluated(&self, q: usize, sigma: f64) -> Vec<usize> {
        match &self.evaluation[q] {
            Evaluation::Sampled(order) => {
                let rs = &self.corpus.result_sets[q];
                let k = validation_size(rs.len(), sigma).expect("sigma validated").min(order.len());
                let mut idx = order[..k].to_vec();
                idx.sort_unstable();
                idx
            }
            Evaluation::Labeled(idx) => idx.clone(),
        }
    }

    /// `μ(D_q)` and `|D_q|` for a training query, minus any excluded documents.
    fn measure(&self, model: &Model, q: usize, excluded: &HashSet<&str>) -> (CumulativeScore, u64) {
        let rs = &self.corpus.result_sets[q];
        if !excluded.is_empty() && rs.doc_ids().any(|id| excluded.contains(id)) {
            let kept = rs.docs().iter().filter(|d| !excluded.contains(d.id.as_str()));
            let score = mu_set(model, kept);
            return (score, score.docs);
        }
        let score = mu_totals(model, &self.totals[q]).unwrap_or_else(|| mu_set_par(model, rs.docs()));
        (score, rs.len() as u64)
    }
}

fn sample_std(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return f64::NAN;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Runs every fold. Folds execute in parallel and are returned in corpus
/// order; a failing fold or method is recorded, never fatal.
pub fn run_loo(corpus: &Corpus, config: &LooConfig) -> Result<Vec<LooRun>, HarnessError> {
    let got = corpus.result_sets.len();
    if got < 3 {
        return Err(HarnessError::TooFewQueries { needed: 3, got });
    }
    config.validate()?;
    let ctx = Context::new(corpus, config)?;
    Ok((0..got).into_par_iter().map(|q| run_fold(&ctx, q)).collect())
}

struct TrainingQuery<'c> {
    index: usize,
    rates: CategoryRates,
    docs: Vec<&'c SparseDoc>,
}

fn run_fold(ctx: &Context<'_>, q: usize) -> LooRun {
    let rs: &ResultSet = &ctx.corpus.result_sets[q];
    let sigma = ctx.sigma_for(q);
    let evaluated = ctx.evaluated(q, sigma);
    let observed = CategoryRates::from_docs(evaluated.iter().map(|&i| &rs.docs()[i]));

    let mut run = LooRun {
        query_id: rs.query_id.to_string(),
        size: rs.len() as u64,
        sigma,
        evaluated: evaluated.len() as u64,
        training_queries: Vec::new(),
        training_docs: 0,
        excluded_docs: 0,
        leaked_docs: 0,
        observed,
        measures: Vec::new(),
        outcomes: Vec::new(),
        status: FoldStatus::Ok,
        failure: None,
    };
    let fail = |mut run: LooRun, reason: String| {
        warn!("fold {}: {reason}", run.query_id);
        run.status = FoldStatus::Failed;
        run.outcomes = ctx
            .config
            .methods()
            .into_iter()
            .map(|method| MethodOutcome {
                method,
                estimate: None,
                error: Some(reason.clone()),
                warning: None,
            })
            .collect();
        run.failure = Some(reason);
        run
    };
    if evaluated.is_empty() {
        return fail(run, "held-out query has no labeled documents".into());
    }

    let held_out: HashSet<&str> = evaluated
        .iter()
        .map(|&i| rs.docs()[i].id.as_str())
        .filter(|id| ctx.shared_ids.contains(id))
        .collect();

    let mut training = Vec::new();
    for (t, other) in ctx.corpus.result_sets.iter().enumerate() {
        if t == q {
            continue;
        }
        let idx = ctx.evaluated(t, sigma);
        if idx.is_empty() {
            continue;
        }
        let all: Vec<&SparseDoc> = idx.iter().map(|&i| &other.docs()[i]).collect();
        let docs: Vec<&SparseDoc> = all.iter().copied().filter(|d| !held_out.contains(d.id.as_str())).collect();
        run.excluded_docs += (all.len() - docs.len()) as u64;
        training.push(TrainingQuery {
            index: t,
            rates: CategoryRates::from_docs(docs.iter().copied()),
            docs,
        });
    }
    run.training_queries = training
        .iter()
        .map(|t| ctx.corpus.result_sets[t.index].query_id.to_string())
        .collect();

    let polar: Vec<&SparseDoc> = training
        .iter()
        .flat_map(|t| t.docs.iter().copied())
        .filter(|d| d.label.is_some_and(Category::is_polar))
        .collect();
    let evaluated_ids: HashSet<&str> = evaluated.iter().map(|&i| rs.docs()[i].id.as_str()).collect();
    run.leaked_docs = polar.iter().filter(|d| evaluated_ids.contains(d.id.as_str())).count() as u64;
    run.training_docs = polar.len() as u64;
    debug!(
        "fold {}: sigma {sigma:.4}, {} evaluated, {} training documents",
        run.query_id,
        evaluated.len(),
        polar.len()
    );

    let vocab = match build_vocabulary(polar.iter().copied(), ctx.corpus.dictionary.len(), ctx.config.train.smoothing) {
        Ok(v) => v,
        Err(e) => return fail(run, format!("vocabulary: {e}")),
    };

    for &kind in &ctx.config.classifiers {
        let model = match train(kind, &vocab, polar.iter().copied(), &ctx.config.train) {
            Ok(m) => m,
            Err(e) => {
                let reason = format!("training {kind}: {e}");
                warn!("fold {}: {reason}", run.query_id);
                for &quantifier in &ctx.config.quantifiers {
                    run.outcomes.push(MethodOutcome {
                        method: Method::new(kind, quantifier),
                        estimate: None,
                        error: Some(reason.clone()),
                        warning: None,
                    });
                }
                continue;
            }
        };
        let (score, size) = ctx.measure(&model, q, &HashSet::new());
        run.measures.push(ClassifierMeasure {
            classifier: kind,
            score,
        });
        let mut cc: Option<QuantEstimate> = None;
        for &quantifier in &ctx.config.quantifiers {
            let method = Method::new(kind, quantifier);
            let mut warning = None;
            let result = match quantifier {
                QuantMethod::ClassifyCount => classify_and_count(&model, &run.query_id, rs.docs()),
                QuantMethod::AdjustedClassifyCount => {
                    let base = match &cc {
                        Some(e) => Ok(e.clone()),
                        None => classify_and_count(&model, &run.query_id, rs.docs()),
                    };
                    base.and_then(|base| {
                        let cm = estimate_confusion(&model, polar.iter().copied())?;
                        let mut e = adjusted_classify_and_count(&base, &cm, ctx.config.max_condition)?;
                        e.method = method;
                        Ok(e)
                    })
                }
                QuantMethod::QueryDriven => {
                    let rows: Vec<QueryRow> = training
                        .iter()
                        .map(|t| {
                            let (score, size) = ctx.measure(&model, t.index, &held_out);
                            let mixed = t.rates.rate(Category::Mixed);
                            QueryRow {
                                score,
                                size,
                                positive_target: t.rates.rate(Category::Positive) + mixed,
                                negative_target: t.rates.rate(Category::Negative) + mixed,
                            }
                        })
                        .collect();
                    let spec = ctx.config.feature_spec();
                    fit_query_driven(kind, &rows, spec)
                        .and_then(|phi| predict(&phi, &spec, &run.query_id, &score, size))
                }
                QuantMethod::ItemDriven => {
                    let rows: Vec<ItemRow> = polar
                        .iter()
                        .map(|d| ItemRow {
                            score: model.mu_doc(d),
                            label: d.label.expect("polar documents are labeled"),
                        })
                        .collect();
                    fit_item_driven(kind, &rows).and_then(|phi| {
                        if phi.one_class {
                            warning = Some("item-driven training rows come from a single class".to_string());
                        }
                        predict(&phi, &FeatureSpec::ITEM_DRIVEN, &run.query_id, &score, size)
                    })
                }
            };
            if quantifier == QuantMethod::ClassifyCount {
                cc = result.as_ref().ok().cloned();
            }
            run.outcomes.push(match result {
                Ok(estimate) => MethodOutcome {
                    method,
                    estimate: Some(estimate),
                    error: None,
                    warning,
                },
                Err(e) => {
                    warn!("fold {}: {method}: {e}", run.query_id);
                    MethodOutcome {
                        method,
                        estimate: None,
                        error: Some(e.to_string()),
                        warning,
                    }
                }
            });
        }
    }
    if run.outcomes.iter().any(|o| o.error.is_some()) {
        run.status = FoldStatus::Partial;
    }
    run
}
