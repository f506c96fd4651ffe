use std::collections::BTreeMap;
use std::io::Write;

use cumquant::classifiers::{self, CumulativeClassifier, CumulativeScore};
use cumquant::corpus::{
    build_vocabulary, ingest, read_corpus_dir, read_dictionary, write_corpus_dir, Category, DocStream, InputFormat, UnknownTerms,
    CORPUS_FILE, DICTIONARY_FILE,
};
use cumquant::harness::{
    assemble_report, generate_synthetic, read_run_info, read_runs, run_loo, write_report, FoldStatus, LooRun, RunInfo,
};
use cumquant::io::write_atomic;
use cumquant::quantifier::{
    adjusted_classify_and_count, predict, write_estimates_csv, FeatureSpec, Method, QuantEstimate, QuantMethod,
    MAX_CONDITION,
};
use cumquant::stats::CompensatedSum;
use log::info;
use serde_json::json;

use crate::args::{IngestArgs, LooArgs, QuantifyArgs, ReportArgs, SynthArgs, TrainArgs};
use crate::bundle::ModelBundle;
use crate::config::FileConfig;
use crate::error::CliError;

pub fn synth(args: &SynthArgs, file: &FileConfig) -> Result<(), CliError> {
    let spec = file.synth_spec(args)?;
    let (corpus, stats) = generate_synthetic(&spec)?;
    let manifest = write_corpus_dir(&args.out, &corpus, Some(json!({ "spec": spec, "stats": stats })))?;
    println!(
        "{}: {} queries, {} documents, {} terms",
        args.out.display(),
        manifest.queries.len(),
        manifest.document_count,
        manifest.term_count
    );
    Ok(())
}

pub fn ingest_cmd(args: &IngestArgs) -> Result<(), CliError> {
    let format = args.format.unwrap_or_else(|| InputFormat::from_path(&args.input));
    let corpus = ingest(&args.input, format)?;
    if corpus.document_count() == 0 {
        return Err(CliError::invalid(format!("{}: no documents", args.input.display())));
    }
    let manifest = write_corpus_dir(&args.out, &corpus, None)?;
    println!(
        "{}: {} queries, {} documents ({} without a query), {} terms",
        args.out.display(),
        manifest.queries.len(),
        manifest.document_count,
        manifest.loose_count,
        manifest.term_count
    );
    Ok(())
}

pub fn train(args: &TrainArgs, file: &FileConfig) -> Result<(), CliError> {
    let settings = file.train_settings(args)?;
    let (corpus, _) = read_corpus_dir(&args.corpus)?;
    let training: Vec<_> = corpus
        .documents()
        .filter(|d| d.label.is_some_and(Category::is_polar))
        .collect();
    for c in Category::POLAR {
        if !training.iter().any(|d| d.label == Some(c)) {
            return Err(CliError::invalid(format!(
                "{}: no training documents labeled {c}",
                args.corpus.display()
            )));
        }
    }
    let vocab = build_vocabulary(training.iter().copied(), corpus.dictionary.len(), settings.train.smoothing)?;
    let model = classifiers::train(settings.classifier, &vocab, training.iter().copied(), &settings.train)?;
    let bundle = ModelBundle::calibrate(settings, &model, &corpus, &training);
    bundle.save(&args.out)?;
    println!(
        "{}: {} trained on {} documents; quantifiers: {}",
        args.out.display(),
        model.kind(),
        training.len(),
        bundle
            .available()
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(", ")
    );
    Ok(())
}

/// Running totals for one query.
#[derive(Default)]
struct QueryTotals {
    decided_positive: u64,
    decided_negative: u64,
    positive: CompensatedSum,
    negative: CompensatedSum,
    docs: u64,
}

impl QueryTotals {
    fn score(&self) -> CumulativeScore {
        CumulativeScore {
            positive: self.positive.value(),
            negative: self.negative.value(),
            docs: self.docs,
        }
    }
}

pub fn quantify(args: &QuantifyArgs) -> Result<(), CliError> {
    let bundle = ModelBundle::load(&args.model)?;
    let (docs_path, dict_path, format) = match (&args.corpus, &args.input) {
        (Some(dir), _) => (dir.join(CORPUS_FILE), dir.join(DICTIONARY_FILE), InputFormat::Jsonl),
        (None, Some(input)) => {
            let dict = args
                .dictionary
                .clone()
                .ok_or_else(|| CliError::invalid("--input needs the model's --dictionary"))?;
            let format = args.format.unwrap_or_else(|| InputFormat::from_path(input));
            (input.clone(), dict, format)
        }
        (None, None) => return Err(CliError::invalid("one of --corpus or --input is required")),
    };
    let dictionary = read_dictionary(&dict_path)?;
    let model = bundle.model(&dictionary)?;

    let methods = if args.quantifier.is_empty() {
        bundle.available()
    } else {
        let mut requested = args.quantifier.clone();
        requested.sort();
        requested.dedup();
        if let Some((m, reason)) = requested
            .iter()
            .find_map(|m| bundle.unavailable.get(m).map(|r| (m, r)))
        {
            return Err(CliError::invalid(format!("{m} is not available in this model: {reason}")));
        }
        requested
    };

    let mut totals: BTreeMap<String, QueryTotals> = BTreeMap::new();
    for doc in DocStream::open(&docs_path, format, &dictionary, UnknownTerms::Skip)? {
        let doc = doc?;
        let query = doc.query.as_deref().unwrap_or(&args.default_query);
        if !totals.contains_key(query) {
            totals.insert(query.to_string(), QueryTotals::default());
        }
        let acc = totals.get_mut(query).expect("inserted above");
        match model.classify(&doc) {
            Category::Positive => acc.decided_positive += 1,
            _ => acc.decided_negative += 1,
        }
        let s = model.mu_doc(&doc);
        acc.positive.add(s.positive);
        acc.negative.add(s.negative);
        acc.docs += 1;
    }
    if totals.is_empty() {
        return Err(CliError::invalid(format!("{}: no documents", docs_path.display())));
    }

    let kind = model.kind();
    let mut estimates = Vec::with_capacity(totals.len() * methods.len());
    for (query, t) in &totals {
        let cc = QuantEstimate::from_sizes(
            query.as_str(),
            Method::new(kind, QuantMethod::ClassifyCount),
            t.decided_positive as f64,
            t.decided_negative as f64,
        )?;
        let score = t.score();
        for &m in &methods {
            let estimate = match m {
                QuantMethod::ClassifyCount => cc.clone(),
                QuantMethod::AdjustedClassifyCount => {
                    let cm = bundle.confusion.as_ref().expect("available");
                    adjusted_classify_and_count(&cc, cm, MAX_CONDITION)?
                }
                QuantMethod::QueryDriven => {
                    let phi = bundle.query_driven.as_ref().expect("available");
                    predict(phi, &phi.spec, query, &score, t.docs)?
                }
                QuantMethod::ItemDriven => {
                    let phi = bundle.item_driven.as_ref().expect("available");
                    predict(phi, &FeatureSpec::ITEM_DRIVEN, query, &score, t.docs)?
                }
            };
            estimates.push(estimate);
        }
    }

    match &args.out {
        Some(path) => {
            write_atomic(path, |out| {
                write_estimates_csv(out, &estimates).map_err(|e| std::io::Error::other(e))
            })
            .map_err(|e| CliError::io(path, e))?;
            info!("{}: {} estimates for {} queries", path.display(), estimates.len(), totals.len());
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_estimates_csv(&mut lock, &estimates)?;
            lock.flush().map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    Ok(())
}

pub fn loo(args: &LooArgs, file: &FileConfig) -> Result<(), CliError> {
    let config = file.loo_config(args)?;
    let (corpus, _) = read_corpus_dir(&args.corpus)?;
    let runs = run_loo(&corpus, &config)?;
    let info = RunInfo {
        config: json!({
            "command": "loo",
            "corpus": args.corpus,
            "loo": config,
        }),
        seed: config.seed,
    };
    let report = assemble_report(&runs).map_err(|e| CliError::Runtime(format!("{e}; {}", fold_summary(&runs))))?;
    write_report(&args.out, &report, &runs, &info)?;
    println!("{}: {}", args.out.display(), fold_summary(&runs));
    check_folds(&runs)
}

pub fn report(args: &ReportArgs) -> Result<(), CliError> {
    let runs = read_runs(&args.runs)?;
    let info = read_run_info(&args.runs)?;
    let report = assemble_report(&runs)?;
    let out = args.out.as_deref().unwrap_or(&args.runs);
    write_report(out, &report, &runs, &info)?;
    println!("{}: {}", out.display(), fold_summary(&runs));
    Ok(())
}

fn fold_summary(runs: &[LooRun]) -> String {
    let count = |s: FoldStatus| runs.iter().filter(|r| r.status == s).count();
    format!(
        "{} folds, {} partial, {} failed",
        runs.len(),
        count(FoldStatus::Partial),
        count(FoldStatus::Failed)
    )
}

fn check_folds(runs: &[LooRun]) -> Result<(), CliError> {
    let failed: Vec<String> = runs
        .iter()
        .filter(|r| r.status == FoldStatus::Failed)
        .map(|r| format!("{} ({})", r.query_id, r.failure.as_deref().unwrap_or("unknown")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("failed folds: {}", failed.join("; "))))
    }
}
