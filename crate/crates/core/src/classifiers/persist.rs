use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, DbmModel, MnbModel, Model, SvmModel, TermWeights};
use crate::corpus::TermDictionary;
use crate::io::write_atomic;

/// Self-describing JSON form of a model. Weights are keyed by term string and
/// bound to the dictionary they were trained against by its fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredModel {
    pub vocab_hash: String,
    #[serde(flatten)]
    pub params: StoredParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StoredParams {
    Mnb {
        alpha: f64,
        log_prior: [f64; 2],
        /// term → [w_P, w_N]
        weights: BTreeMap<String, [f64; 2]>,
    },
    Dbm {
        smoothing: f64,
        log_prior: [f64; 2],
        weights: BTreeMap<String, [f64; 2]>,
    },
    Svm {
        bias: f64,
        margin: f64,
        weights: BTreeMap<String, f64>,
    },
}

fn export_table(table: &TermWeights, dict: &TermDictionary) -> BTreeMap<String, [f64; 2]> {
    table
        .known_terms()
        .map(|t| {
            let (p, n) = table.get(t).expect("known term");
            (dict.term(t).to_string(), [p, n])
        })
        .collect()
}

fn import_table(weights: &BTreeMap<String, [f64; 2]>, dict: &TermDictionary) -> Result<TermWeights, ClassifierError> {
    let mut table = TermWeights::new(dict.len());
    for (term, &[p, n]) in weights {
        let id = dict.get(term).ok_or_else(|| ClassifierError::UnknownTerm(term.clone()))?;
        if !p.is_finite() || !n.is_finite() {
            return Err(ClassifierError::Malformed(format!("non-finite weight for {term:?}")));
        }
        table.set(id, p, n);
    }
    Ok(table)
}

impl StoredModel {
    pub fn from_model(model: &Model, dict: &TermDictionary) -> Self {
        let params = match model {
            Model::Mnb(m) => StoredParams::Mnb {
                alpha: m.alpha,
                log_prior: m.log_prior,
                weights: export_table(&m.weights, dict),
            },
            Model::Dbm(m) => StoredParams::Dbm {
                smoothing: m.smoothing,
                log_prior: m.log_prior,
                weights: export_table(&m.weights, dict),
            },
            Model::Svm(m) => StoredParams::Svm {
                bias: m.bias,
                margin: m.margin,
                weights: m
                    .weights
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w != 0.0)
                    .map(|(i, &w)| (dict.term(crate::corpus::TermId(i as u32)).to_string(), w))
                    .collect(),
            },
        };
        Self {
            vocab_hash: dict.fingerprint(),
            params,
        }
    }

    /// Rebuilds the model over `dict`, which must be the training dictionary.
    pub fn into_model(self, dict: &TermDictionary) -> Result<Model, ClassifierError> {
        let found = dict.fingerprint();
        if found != self.vocab_hash {
            return Err(ClassifierError::VocabularyMismatch {
                expected: self.vocab_hash,
                found,
            });
        }
        Ok(match self.params {
            StoredParams::Mnb {
                alpha,
                log_prior,
                weights,
            } => Model::Mnb(MnbModel {
                log_prior,
                weights: import_table(&weights, dict)?,
                alpha,
            }),
            StoredParams::Dbm {
                smoothing,
                log_prior,
                weights,
            } => Model::Dbm(DbmModel {
                log_prior,
                weights: import_table(&weights, dict)?,
                smoothing,
            }),
            StoredParams::Svm { bias, margin, weights } => {
                let mut dense = vec![0.0; dict.len()];
                for (term, w) in weights {
                    let id = dict.get(&term).ok_or(ClassifierError::UnknownTerm(term))?;
                    dense[id.index()] = w;
                }
                Model::Svm(SvmModel {
                    weights: dense,
                    bias,
                    margin,
                })
            }
        })
    }
}

pub fn save_model(path: &Path, model: &Model, dict: &TermDictionary) -> Result<(), ClassifierError> {
    let stored = StoredModel::from_model(model, dict);
    write_atomic(path, |out| {
        serde_json::to_writer(&mut *out, &stored)?;
        out.write_all(b"\n")
    })
    .map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path, dict: &TermDictionary) -> Result<Model, ClassifierError> {
    let file = File::open(path).map_err(|source| ClassifierError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let stored: StoredModel =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| ClassifierError::Malformed(e.to_string()))?;
    stored.into_model(dict)
}
