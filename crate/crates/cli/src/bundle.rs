//! Trained model file: the classifier plus whatever each quantifier needs.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use cumquant::classifiers::{mu_set_par, mu_totals, CumulativeClassifier, Model, StoredModel, TermTotals};
use cumquant::corpus::{Category, CategoryRates, Corpus, SparseDoc, TermDictionary};
use cumquant::io::write_atomic;
use cumquant::quantifier::{
    estimate_confusion, fit_item_driven, fit_query_driven, ConfusionMatrix, FeatureSpec, ItemRow, QuantMethod,
    QueryRow, RegressionModel, MAX_CONDITION,
};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::config::TrainSettings;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub settings: TrainSettings,
    pub classifier: StoredModel,
    /// Decision rates on the training documents, for ACC.
    pub confusion: Option<ConfusionMatrix>,
    pub query_driven: Option<RegressionModel>,
    pub item_driven: Option<RegressionModel>,
    /// Quantifiers that could not be calibrated, with the reason.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub unavailable: BTreeMap<QuantMethod, String>,
}

impl ModelBundle {
    /// Calibrates every quantifier on the labeled documents of `corpus`.
    /// `training` are its P and N documents, on which `model` was trained.
    pub fn calibrate(settings: TrainSettings, model: &Model, corpus: &Corpus, training: &[&SparseDoc]) -> Self {
        let mut unavailable = BTreeMap::new();
        let kind = settings.classifier;

        let confusion = match estimate_confusion(model, training.iter().copied()) {
            Ok(cm) if cm.condition() <= MAX_CONDITION => Some(cm),
            Ok(cm) => {
                let reason = format!("confusion matrix is ill-conditioned ({:e})", cm.condition());
                unavailable.insert(QuantMethod::AdjustedClassifyCount, reason);
                None
            }
            Err(e) => {
                unavailable.insert(QuantMethod::AdjustedClassifyCount, e.to_string());
                None
            }
        };

        let dict_len = corpus.dictionary.len();
        let rows: Vec<QueryRow> = corpus
            .result_sets
            .iter()
            .filter_map(|rs| {
                let rates = CategoryRates::from_docs(rs.docs());
                if rates.total == 0 {
                    return None;
                }
                let score = mu_totals(model, &TermTotals::from_docs(dict_len, rs.docs()))
                    .unwrap_or_else(|| mu_set_par(model, rs.docs()));
                let mixed = rates.rate(Category::Mixed);
                Some(QueryRow {
                    score,
                    size: rs.len() as u64,
                    positive_target: rates.rate(Category::Positive) + mixed,
                    negative_target: rates.rate(Category::Negative) + mixed,
                })
            })
            .collect();
        let spec = FeatureSpec::query_driven(settings.normalize, settings.include_size);
        let query_driven = fit_query_driven(kind, &rows, spec)
            .map_err(|e| unavailable.insert(QuantMethod::QueryDriven, e.to_string()))
            .ok();

        let items: Vec<ItemRow> = training
            .iter()
            .map(|d| ItemRow {
                score: model.mu_doc(d),
                label: d.label.expect("training documents are labeled"),
            })
            .collect();
        let item_driven = fit_item_driven(kind, &items)
            .map_err(|e| unavailable.insert(QuantMethod::ItemDriven, e.to_string()))
            .ok();

        for (method, reason) in &unavailable {
            warn!("{method} not calibrated: {reason}");
        }
        Self {
            classifier: StoredModel::from_model(model, &corpus.dictionary),
            settings,
            confusion,
            query_driven,
            item_driven,
            unavailable,
        }
    }

    pub fn available(&self) -> Vec<QuantMethod> {
        QuantMethod::ALL
            .into_iter()
            .filter(|m| !self.unavailable.contains_key(m))
            .collect()
    }

    pub fn model(&self, dict: &TermDictionary) -> Result<Model, CliError> {
        Ok(self.classifier.clone().into_model(dict)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_atomic(path, |out| {
            serde_json::to_writer(&mut *out, self)?;
            out.write_all(b"\n")
        })
        .map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::invalid(format!("{}: not a model file: {e}", path.display())))
    }
}
