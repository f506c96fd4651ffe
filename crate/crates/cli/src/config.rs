//! Settings from flags, an optional TOML file and built-in defaults.

use std::path::Path;

use cumquant::classifiers::{ClassifierKind, TrainParams};
use cumquant::harness::{Divergence, LooConfig, NegativeRates, SynthSpec};
use cumquant::quantifier::QuantMethod;
use serde::{Deserialize, Serialize};

use crate::args::{FeatureArgs, LooArgs, ModelArgs, SynthArgs, TrainArgs};
use crate::error::CliError;

pub const SEED_ENV: &str = "CUMQUANT_SEED";

/// Contents of a `--config` file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// Classifier for `train`.
    pub classifier: Option<ClassifierKind>,
    /// Classifiers for `loo`.
    pub classifiers: Option<Vec<ClassifierKind>>,
    pub quantifiers: Option<Vec<QuantMethod>>,
    pub normalize: Option<bool>,
    pub include_size: Option<bool>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub smoothing: Option<f64>,
    pub margin: Option<f64>,
    pub epochs: Option<usize>,
    pub reg: Option<f64>,
    #[serde(default)]
    pub synth: SynthFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthFile {
    pub queries: Option<usize>,
    pub preset: Option<String>,
    pub size_median: Option<f64>,
    pub size_mean: Option<f64>,
    pub scale: Option<f64>,
    pub doc_length: Option<f64>,
    pub complement: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
    }

    /// Flag, then file, then `CUMQUANT_SEED`, then 0.
    fn seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| CliError::invalid(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Ok(0),
        }
    }

    pub fn threads(&self, flag: Option<usize>) -> Result<Option<usize>, CliError> {
        match flag.or(self.threads) {
            Some(0) => Err(CliError::invalid("--threads must be at least 1")),
            t => Ok(t),
        }
    }

    fn train_params(&self, args: &ModelArgs) -> Result<TrainParams, CliError> {
        let mut p = TrainParams::default();
        p.alpha = args.alpha.or(self.alpha).unwrap_or(p.alpha);
        p.smoothing = args.smoothing.or(self.smoothing).unwrap_or(p.smoothing);
        p.svm.margin = args.margin.or(self.margin).unwrap_or(p.svm.margin);
        p.svm.epochs = args.epochs.or(self.epochs).unwrap_or(p.svm.epochs);
        p.svm.reg = args.reg.or(self.reg).unwrap_or(p.svm.reg);
        p.svm.seed = self.seed(args.seed)?;
        for (name, value) in [("alpha", p.alpha), ("smoothing", p.smoothing), ("reg", p.svm.reg)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CliError::invalid(format!("{name} must be positive and finite, got {value}")));
            }
        }
        if !(p.svm.margin >= 0.0 && p.svm.margin.is_finite()) {
            return Err(CliError::invalid(format!("margin must be non-negative, got {}", p.svm.margin)));
        }
        if p.svm.epochs == 0 {
            return Err(CliError::invalid("epochs must be at least 1"));
        }
        Ok(p)
    }

    fn features(&self, args: &FeatureArgs) -> (bool, bool) {
        let normalize = !args.no_normalize && self.normalize.unwrap_or(true);
        let include_size = args.include_size || self.include_size.unwrap_or(false);
        (normalize, include_size)
    }

    pub fn synth_spec(&self, args: &SynthArgs) -> Result<SynthSpec, CliError> {
        let f = &self.synth;
        let mut spec = SynthSpec::default();
        spec.queries = args.queries.or(f.queries).unwrap_or(spec.queries);
        if let Some(name) = args.preset.as_ref().or(f.preset.as_ref()) {
            spec.divergence = Divergence::preset(name).ok_or_else(|| {
                CliError::invalid(format!(
                    "unknown preset {name:?} (expected one of {})",
                    Divergence::PRESETS.join(", ")
                ))
            })?;
        }
        spec.size_median = args.size_median.or(f.size_median).unwrap_or(spec.size_median);
        spec.size_mean = args.size_mean.or(f.size_mean).unwrap_or(spec.size_mean.max(spec.size_median));
        if let Some(scale) = args.scale.or(f.scale) {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(CliError::invalid(format!("scale must be positive, got {scale}")));
            }
            spec = spec.scaled(scale);
        }
        spec.mean_doc_length = args.doc_length.or(f.doc_length).unwrap_or(spec.mean_doc_length);
        if args.complement || f.complement.unwrap_or(false) {
            spec.negative_rates = NegativeRates::Complement;
        }
        spec.seed = self.seed(args.seed)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn train_settings(&self, args: &TrainArgs) -> Result<TrainSettings, CliError> {
        let (normalize, include_size) = self.features(&args.features);
        Ok(TrainSettings {
            classifier: args.classifier.or(self.classifier).unwrap_or(ClassifierKind::Mnb),
            train: self.train_params(&args.model)?,
            normalize,
            include_size,
        })
    }

    pub fn loo_config(&self, args: &LooArgs) -> Result<LooConfig, CliError> {
        let (normalize, include_size) = self.features(&args.features);
        let defaults = LooConfig::default();
        let train = self.train_params(&args.model)?;
        let config = LooConfig {
            classifiers: resolve_list(&args.classifier, &self.classifiers, &defaults.classifiers),
            quantifiers: resolve_list(&args.quantifier, &self.quantifiers, &defaults.quantifiers),
            normalize,
            include_size,
            sigma: args.sigma.or(self.sigma),
            seed: train.svm.seed,
            train,
            ..defaults
        };
        if config.classifiers.is_empty() || config.quantifiers.is_empty() {
            return Err(CliError::invalid("at least one classifier and one quantifier are required"));
        }
        if let Some(s) = config.sigma {
            if !(s > 0.0 && s <= 1.0) {
                return Err(CliError::invalid(format!("sigma must lie in (0, 1], got {s}")));
            }
        }
        Ok(config)
    }
}

/// Flag list, else file list, else defaults; sorted and deduplicated.
fn resolve_list<T: Clone + Ord>(flag: &[T], file: &Option<Vec<T>>, default: &[T]) -> Vec<T> {
    let mut v = if !flag.is_empty() {
        flag.to_vec()
    } else {
        file.clone().unwrap_or_else(|| default.to_vec())
    };
    v.sort();
    v.dedup();
    v
}

/// Effective settings of a `train` run, stored with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub classifier: ClassifierKind,
    pub train: TrainParams,
    pub normalize: bool,
    pub include_size: bool,
}
