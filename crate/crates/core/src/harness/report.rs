//! Correlation, goodness-of-fit and error tables over leave-one-out runs.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::loo::{observed_shares, FoldStatus, LooRun};
use super::HarnessError;
use crate::classifiers::ClassifierKind;
use crate::corpus::Category;
use crate::io::write_bytes_atomic;
use crate::quantifier::{write_estimates_csv, Method, QuantEstimate};
use crate::stats::{
    error_measures, ks_two_sample, pearson, CorrResult, ErrorMeasures, KsResult, PairedPoint, PairedSeries,
    QueryDistribution,
};

pub const RUNS_FILE: &str = "runs.json";
pub const RUN_FILE: &str = "run.json";
pub const ESTIMATES_FILE: &str = "estimates.csv";

/// KS p-values at or above this are starred in the goodness-of-fit table.
const STAR_P: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome<T> {
    Ok(T),
    Failed(String),
}

impl<T> Outcome<T> {
    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Failed(_) => None,
        }
    }

    fn note(&self) -> &str {
        match self {
            Outcome::Ok(_) => "",
            Outcome::Failed(r) => r,
        }
    }
}

impl<T, E: std::fmt::Display> From<Result<T, E>> for Outcome<T> {
    fn from(r: Result<T, E>) -> Self {
        r.map_or_else(|e| Outcome::Failed(e.to_string()), Outcome::Ok)
    }
}

/// One query's observed and fitted share, or why it is missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub query_id: String,
    pub observed: Option<f64>,
    pub fitted: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    /// `|D_q|`.
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: Category,
    pub cells: Vec<Cell>,
    pub series: PairedSeries,
    pub correlation: Outcome<CorrResult>,
    pub ks: Outcome<KsResult>,
    pub measures: Outcome<ErrorMeasures>,
}

impl CategoryReport {
    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.failure.is_some()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    pub categories: Vec<CategoryReport>,
}

impl MethodReport {
    pub fn category(&self, c: Category) -> Option<&CategoryReport> {
        self.categories.iter().find(|r| r.category == c)
    }
}

/// Correlation of a classifier's set measure `μ_c(D_q)` with the estimated
/// category size `rate_c(V_q)·|D_q|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCorrelation {
    pub classifier: ClassifierKind,
    pub category: Category,
    /// `observed` is the size estimate, `fitted` the measure.
    pub series: PairedSeries,
    pub correlation: Outcome<CorrResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub folds: usize,
    pub failed_folds: usize,
    pub measures: Vec<MeasureCorrelation>,
    pub methods: Vec<MethodReport>,
}

impl ExperimentReport {
    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }
}

fn cell(run: &LooRun, method: Method, c: Category) -> Cell {
    let mut cell = Cell {
        query_id: run.query_id.clone(),
        observed: None,
        fitted: None,
        failure: None,
        size: run.size,
    };
    let observed = observed_shares(&run.observed, method.quantifier);
    cell.observed = observed.map(|(p, n)| if c == Category::Positive { p } else { n });
    let outcome = run.outcome(method);
    cell.fitted = outcome.and_then(|o| o.estimate.as_ref()).and_then(|e| e.share(c));
    cell.failure = match (outcome, cell.observed, cell.fitted) {
        (_, Some(_), Some(_)) => None,
        (None, _, _) => Some(run.failure.clone().unwrap_or_else(|| "method not run".into())),
        (Some(o), _, None) => Some(o.error.clone().unwrap_or_else(|| "no estimate".into())),
        (Some(_), None, Some(_)) => Some("validation sample holds no polar documents".into()),
    };
    cell
}

fn category_report(runs: &[&LooRun], method: Method, c: Category) -> CategoryReport {
    let cells: Vec<Cell> = runs.iter().map(|r| cell(r, method, c)).collect();
    let complete: Vec<(&Cell, f64, f64)> = cells
        .iter()
        .filter_map(|cell| Some((cell, cell.observed?, cell.fitted?)))
        .collect();
    let series = PairedSeries {
        points: complete
            .iter()
            .map(|&(cell, observed, fitted)| PairedPoint {
                query_id: cell.query_id.clone(),
                category: c,
                observed,
                fitted,
            })
            .collect(),
    };
    let correlation = pearson(&series).into();
    let ks = ks_two_sample(&series.observed(), &series.fitted()).into();

    // Each query contributes the binary distribution (c, not c).
    let mut both = series.clone();
    both.points.extend(series.points.iter().map(|p| PairedPoint {
        observed: 1.0 - p.observed,
        fitted: 1.0 - p.fitted,
        ..p.clone()
    }));
    let distributions: Vec<QueryDistribution> = complete
        .iter()
        .map(|&(cell, o, f)| QueryDistribution {
            query_id: cell.query_id.clone(),
            truth: vec![o, 1.0 - o],
            estimate: vec![f, 1.0 - f],
            set_size: cell.size,
        })
        .collect();
    let measures = error_measures(&both, &distributions).into();
    CategoryReport {
        category: c,
        cells,
        series,
        correlation,
        ks,
        measures,
    }
}

fn measure_correlation(runs: &[&LooRun], classifier: ClassifierKind, c: Category) -> MeasureCorrelation {
    let points: Vec<PairedPoint> = runs
        .iter()
        .filter_map(|r| {
            let mu = r.measure(classifier)?.get(c)?;
            Some(PairedPoint {
                query_id: r.query_id.clone(),
                category: c,
                observed: r.observed.rate(c) * r.size as f64,
                fitted: mu,
            })
        })
        .collect();
    let series = PairedSeries { points };
    MeasureCorrelation {
        classifier,
        category: c,
        correlation: pearson(&series).into(),
        series,
    }
}

/// Builds per-method, per-category statistics over the folds, ordered by query id.
pub fn assemble_report(runs: &[LooRun]) -> Result<ExperimentReport, HarnessError> {
    let mut ordered: Vec<&LooRun> = runs.iter().collect();
    ordered.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let ok = ordered.iter().filter(|r| r.status != FoldStatus::Failed).count();
    if ok < 3 {
        return Err(HarnessError::TooFewFolds { needed: 3, got: ok });
    }
    let methods: Vec<Method> = Method::all()
        .filter(|m| runs.iter().any(|r| r.outcome(*m).is_some()))
        .collect();
    let classifiers: Vec<ClassifierKind> = ClassifierKind::ALL
        .into_iter()
        .filter(|&k| methods.iter().any(|m| m.classifier == k))
        .collect();
    Ok(ExperimentReport {
        folds: runs.len(),
        failed_folds: runs.len() - ok,
        measures: classifiers
            .iter()
            .flat_map(|&k| Category::POLAR.map(|c| measure_correlation(&ordered, k, c)))
            .collect(),
        methods: methods
            .iter()
            .map(|&m| MethodReport {
                method: m,
                categories: Category::POLAR.map(|c| category_report(&ordered, m, c)).to_vec(),
            })
            .collect(),
    })
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => x.to_string(),
        _ => "NA".into(),
    }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

fn table1(report: &ExperimentReport) -> Result<Vec<u8>, csv::Error> {
    csv_bytes(
        &["classifier", "category", "n", "rho", "lo", "hi", "p", "note"],
        report.measures.iter().map(|m| {
            let r = m.correlation.ok();
            vec![
                m.classifier.to_string(),
                m.category.to_string(),
                m.series.len().to_string(),
                num(r.map(|r| r.rho)),
                num(r.and_then(|r| r.interval).map(|i| i.0)),
                num(r.and_then(|r| r.interval).map(|i| i.1)),
                num(r.and_then(|r| r.p_value)),
                m.correlation.note().to_string(),
            ]
        }),
    )
}

fn table2(report: &ExperimentReport) -> Result<Vec<u8>, csv::Error> {
    let names: Vec<String> = report.methods.iter().map(|m| m.method.to_string()).collect();
    let mut header = vec!["statistic"];
    header.extend(names.iter().map(String::as_str));
    type Stat = fn(&CorrResult) -> Option<f64>;
    let stats: [(&str, Stat); 4] = [
        ("rho", |r| Some(r.rho)),
        ("lo", |r| r.interval.map(|i| i.0)),
        ("hi", |r| r.interval.map(|i| i.1)),
        ("p", |r| r.p_value),
    ];
    let rows = Category::POLAR.into_iter().flat_map(|c| {
        stats.iter().map(move |(name, stat)| {
            let mut row = vec![format!("{c}_{name}")];
            row.extend(report.methods.iter().map(|m| {
                num(m.category(c).and_then(|r| r.correlation.ok()).and_then(stat))
            }));
            row
        })
    });
    csv_bytes(&header, rows)
}

fn table3(report: &ExperimentReport) -> Result<Vec<u8>, csv::Error> {
    let header = [
        "method", "category", "n", "failed", "ks_d", "ks_p", "star", "ae", "rae", "kld", "nkld", "note",
    ];
    let rows = report.methods.iter().flat_map(|m| {
        m.categories.iter().map(move |r| {
            let ks = r.ks.ok();
            let e = r.measures.ok();
            let note = [r.ks.note(), r.measures.note()]
                .into_iter()
                .filter(|n| !n.is_empty())
                .collect::<Vec<_>>()
                .join("; ");
            vec![
                m.method.to_string(),
                r.category.to_string(),
                r.series.len().to_string(),
                r.failed_cells().to_string(),
                num(ks.map(|k| k.statistic)),
                num(ks.map(|k| k.p_value)),
                if ks.is_some_and(|k| k.p_value >= STAR_P) { "*" } else { "" }.to_string(),
                num(e.map(|e| e.ae)),
                num(e.map(|e| e.rae)),
                num(e.map(|e| e.kld)),
                num(e.map(|e| e.nkld)),
                note,
            ]
        })
    });
    csv_bytes(&header, rows)
}

fn scatter(report: &CategoryReport) -> Result<Vec<u8>, csv::Error> {
    csv_bytes(
        &["query_id", "observed", "fitted", "status"],
        report.cells.iter().map(|c| {
            vec![
                c.query_id.clone(),
                num(c.observed),
                num(c.fitted),
                c.failure.clone().unwrap_or_else(|| "ok".into()),
            ]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FoldSummary {
    query_id: String,
    status: FoldStatus,
    sigma: f64,
    evaluated: u64,
    training_docs: u64,
    excluded_docs: u64,
    leaked_docs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    failed_methods: Vec<MethodNote>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<MethodNote>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MethodNote {
    method: Method,
    message: String,
}

/// Effective configuration and seed echoed into `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub config: serde_json::Value,
    pub seed: u64,
}

#[derive(Serialize)]
struct RunFile<'a> {
    #[serde(flatten)]
    info: &'a RunInfo,
    folds: usize,
    failed_folds: usize,
    partial_folds: usize,
    fold_status: Vec<FoldSummary>,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::io(path, e)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    write_bytes_atomic(path, bytes).map_err(io_err(path))
}

fn csv_file(path: &Path, bytes: Result<Vec<u8>, csv::Error>) -> Result<(), HarnessError> {
    let bytes = bytes.map_err(|e| HarnessError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_file(path, &bytes)
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report types serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes the report directory. Every file is replaced atomically.
pub fn write_report(dir: &Path, report: &ExperimentReport, runs: &[LooRun], info: &RunInfo) -> Result<(), HarnessError> {
    let tables = dir.join("tables");
    csv_file(&tables.join("table1.csv"), table1(report))?;
    csv_file(&tables.join("table2.csv"), table2(report))?;
    csv_file(&tables.join("table3.csv"), table3(report))?;
    let scatter_dir = dir.join("scatter");
    for m in &report.methods {
        for r in &m.categories {
            csv_file(&scatter_dir.join(format!("{}_{}.csv", m.method, r.category)), scatter(r))?;
        }
    }

    let estimates: Vec<QuantEstimate> = runs
        .iter()
        .flat_map(|r| r.outcomes.iter().filter_map(|o| o.estimate.clone()))
        .collect();
    let mut bytes = Vec::new();
    write_estimates_csv(&mut bytes, &estimates)?;
    write_file(&dir.join(ESTIMATES_FILE), &bytes)?;
    write_file(&dir.join(RUNS_FILE), &json_bytes(&runs))?;

    let notes = |r: &LooRun, pick: fn(&super::MethodOutcome) -> Option<&String>| {
        r.outcomes
            .iter()
            .filter_map(|o| {
                pick(o).map(|m| MethodNote {
                    method: o.method,
                    message: m.clone(),
                })
            })
            .collect::<Vec<_>>()
    };
    let fold_status = runs
        .iter()
        .map(|r| FoldSummary {
            query_id: r.query_id.clone(),
            status: r.status,
            sigma: r.sigma,
            evaluated: r.evaluated,
            training_docs: r.training_docs,
            excluded_docs: r.excluded_docs,
            leaked_docs: r.leaked_docs,
            failure: r.failure.clone(),
            failed_methods: if r.status == FoldStatus::Failed {
                Vec::new()
            } else {
                notes(r, |o| o.error.as_ref())
            },
            warnings: notes(r, |o| o.warning.as_ref()),
        })
        .collect();
    let run_file = RunFile {
        info,
        folds: runs.len(),
        failed_folds: runs.iter().filter(|r| r.status == FoldStatus::Failed).count(),
        partial_folds: runs.iter().filter(|r| r.status == FoldStatus::Partial).count(),
        fold_status,
    };
    write_file(&dir.join(RUN_FILE), &json_bytes(&run_file))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| HarnessError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Fold results saved by [`write_report`].
pub fn read_runs(dir: &Path) -> Result<Vec<LooRun>, HarnessError> {
    read_json(&dir.join(RUNS_FILE))
}

/// Configuration echo saved by [`write_report`].
pub fn read_run_info(dir: &Path) -> Result<RunInfo, HarnessError> {
    let value: serde_json::Value = read_json(&dir.join(RUN_FILE))?;
    let path = dir.join(RUN_FILE);
    let format = |m: &str| HarnessError::Format {
        path: path.display().to_string(),
        message: m.into(),
    };
    Ok(RunInfo {
        config: value.get("config").cloned().ok_or_else(|| format("missing config"))?,
        seed: value.get("seed").and_then(|s| s.as_u64()).ok_or_else(|| format("missing seed"))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::CumulativeScore;
    use crate::corpus::CategoryRates;
    use crate::harness::{MethodOutcome, ClassifierMeasure};
    use crate::quantifier::QuantMethod;

    const CC: Method = Method {
        classifier: ClassifierKind::Mnb,
        quantifier: QuantMethod::ClassifyCount,
    };
    const PHI: Method = Method {
        classifier: ClassifierKind::Mnb,
        quantifier: QuantMethod::QueryDriven,
    };

    /// A fold whose P share is `p` in both the sample and the estimates.
    fn run(q: usize, p: u64, fitted: Option<f64>) -> LooRun {
        let query_id = format!("q{q:02}");
        let outcomes = [CC, PHI]
            .into_iter()
            .map(|method| {
                let estimate = fitted.map(|f| {
                    QuantEstimate::from_sizes(&query_id, method, f * 100.0, (1.0 - f) * 100.0).unwrap()
                });
                MethodOutcome {
                    method,
                    error: estimate.is_none().then(|| "boom".to_string()),
                    estimate,
                    warning: None,
                }
            })
            .collect();
        LooRun {
            query_id,
            size: 100,
            sigma: 0.1,
            evaluated: 20,
            training_queries: vec![],
            training_docs: 0,
            excluded_docs: 0,
            leaked_docs: 0,
            observed: CategoryRates {
                counts: [p, 20 - p, 0, 0, 0, 0],
                total: 20,
            },
            measures: vec![ClassifierMeasure {
                classifier: ClassifierKind::Mnb,
                score: CumulativeScore {
                    positive: p as f64 * 3.0,
                    negative: 1.0,
                    docs: 100,
                },
            }],
            outcomes,
            status: if fitted.is_some() { FoldStatus::Ok } else { FoldStatus::Partial },
            failure: None,
        }
    }

    fn perfect() -> Vec<LooRun> {
        (1..=6).map(|q| run(q, q as u64 * 2, Some(q as f64 * 2.0 / 20.0))).collect()
    }

    #[test]
    fn perfect_fit() {
        let report = assemble_report(&perfect()).unwrap();
        for m in &report.methods {
            for r in &m.categories {
                assert!((r.correlation.ok().unwrap().rho - 1.0).abs() < 1e-12);
                let ks = r.ks.ok().unwrap();
                assert_eq!(ks.statistic, 0.0);
                assert_eq!(ks.p_value, 1.0);
                assert!(r.measures.ok().unwrap().ae < 1e-15);
            }
        }
        let mc = &report.measures[0];
        assert!((mc.correlation.ok().unwrap().rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn failing_fold_is_flagged_in_isolation() {
        let mut runs = perfect();
        runs[2] = run(3, 6, None);
        let report = assemble_report(&runs).unwrap();
        for m in &report.methods {
            for r in &m.categories {
                assert_eq!(r.cells.len(), 6);
                assert_eq!(r.failed_cells(), 1);
                assert_eq!(r.cells[2].failure.as_deref(), Some("boom"));
                assert_eq!(r.series.len(), 5);
                assert!(r.correlation.ok().is_some());
            }
        }
    }

    #[test]
    fn all_failed_is_an_error() {
        let mut runs = perfect();
        for r in &mut runs {
            r.status = FoldStatus::Failed;
        }
        assert!(matches!(assemble_report(&runs), Err(HarnessError::TooFewFolds { got: 0, .. })));
    }

    #[test]
    fn report_files_round_trip() {
        let mut runs = perfect();
        runs[0] = run(1, 2, None);
        let report = assemble_report(&runs).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let info = RunInfo {
            config: serde_json::json!({"k": 1}),
            seed: 5,
        };
        write_report(dir.path(), &report, &runs, &info).unwrap();
        for f in ["tables/table1.csv", "tables/table2.csv", "tables/table3.csv", "scatter/mnb-cc_P.csv", "run.json"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
        assert_eq!(read_runs(dir.path()).unwrap(), runs);
        assert_eq!(read_run_info(dir.path()).unwrap(), info);
        let t2 = std::fs::read_to_string(dir.path().join("tables/table2.csv")).unwrap();
        assert!(t2.starts_with("statistic,mnb-cc,mnb-phi-query\n"));
        let scatter = std::fs::read_to_string(dir.path().join("scatter/mnb-cc_P.csv")).unwrap();
        assert!(scatter.lines().nth(1).unwrap().ends_with(",NA,boom"));
    }
}
