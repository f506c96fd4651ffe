//! On-disk corpus directories: `corpus.jsonl`, `dictionary.json`, `manifest.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ingest::write_json_doc;
use super::{
    Category, Corpus, CorpusError, InputFormat, QueryId, RecordReader, ResultSet, SparseDoc, TermDictionary, TermId,
};
use crate::io::write_atomic;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const DICTIONARY_FILE: &str = "dictionary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySummary {
    pub query_id: String,
    pub size: usize,
    pub labeled: usize,
    pub gold_counts: BTreeMap<Category, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub vocab_hash: String,
    pub term_count: usize,
    pub document_count: usize,
    pub loose_count: usize,
    pub queries: Vec<QuerySummary>,
    /// Generator parameters and realized statistics, when synthetic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<serde_json::Value>,
}

impl CorpusManifest {
    pub fn describe(corpus: &Corpus, synth: Option<serde_json::Value>) -> Self {
        let queries = corpus
            .result_sets
            .iter()
            .map(|rs| {
                let counts = rs.gold_counts();
                QuerySummary {
                    query_id: rs.query_id.to_string(),
                    size: rs.len(),
                    labeled: counts.iter().sum::<u64>() as usize,
                    gold_counts: Category::ALL
                        .into_iter()
                        .filter(|c| counts[c.index()] > 0)
                        .map(|c| (c, counts[c.index()]))
                        .collect(),
                }
            })
            .collect();
        Self {
            vocab_hash: corpus.dictionary.fingerprint(),
            term_count: corpus.dictionary.len(),
            document_count: corpus.document_count(),
            loose_count: corpus.loose.len(),
            queries,
            synth,
        }
    }
}

/// What to do with a term that is missing from the dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownTerms {
    Reject,
    Skip,
}

/// Streams documents from a record file, resolving terms against a fixed dictionary.
pub struct DocStream<'d, R> {
    records: RecordReader<R>,
    dictionary: &'d TermDictionary,
    unknown: UnknownTerms,
    queries: HashMap<String, QueryId>,
}

impl<'d> DocStream<'d, BufReader<File>> {
    pub fn open(
        path: &Path,
        format: InputFormat,
        dictionary: &'d TermDictionary,
        unknown: UnknownTerms,
    ) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
        Ok(Self::new(BufReader::with_capacity(1 << 20, file), format, dictionary, unknown))
    }
}

impl<'d, R: BufRead> DocStream<'d, R> {
    pub fn new(reader: R, format: InputFormat, dictionary: &'d TermDictionary, unknown: UnknownTerms) -> Self {
        Self {
            records: RecordReader::new(reader, format),
            dictionary,
            unknown,
            queries: HashMap::new(),
        }
    }
}

impl<R: BufRead> Iterator for DocStream<'_, R> {
    type Item = Result<SparseDoc, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        let mut terms: Vec<(TermId, u32)> = Vec::with_capacity(record.tokens.len());
        for (term, tf) in &record.tokens {
            match (self.dictionary.get(term), self.unknown) {
                (Some(id), _) => terms.push((id, *tf)),
                (None, UnknownTerms::Skip) => {}
                (None, UnknownTerms::Reject) => return Some(Err(CorpusError::UnknownTerm(term.clone()))),
            }
        }
        let mut doc = SparseDoc::new(record.id, terms);
        doc.label = record.label;
        doc.query = record.query.map(|q| {
            self.queries
                .entry(q)
                .or_insert_with_key(|k| Arc::from(k.as_str()))
                .clone()
        });
        Some(Ok(doc))
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> CorpusError {
    CorpusError::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Writes `corpus` to `dir`, returning the manifest that was written.
pub fn write_corpus_dir(
    dir: &Path,
    corpus: &Corpus,
    synth: Option<serde_json::Value>,
) -> Result<CorpusManifest, CorpusError> {
    std::fs::create_dir_all(dir).map_err(|e| CorpusError::io(dir, e))?;

    let dict_path = dir.join(DICTIONARY_FILE);
    write_atomic(&dict_path, |out| {
        serde_json::to_writer(&mut *out, corpus.dictionary.terms())?;
        out.write_all(b"\n")
    })
    .map_err(|e| CorpusError::io(&dict_path, e))?;

    let corpus_path = dir.join(CORPUS_FILE);
    write_atomic(&corpus_path, |out| {
        for doc in corpus.documents() {
            write_json_doc(out, doc, &corpus.dictionary)?;
        }
        Ok(())
    })
    .map_err(|e| CorpusError::io(&corpus_path, e))?;

    let manifest = CorpusManifest::describe(corpus, synth);
    let manifest_path = dir.join(MANIFEST_FILE);
    write_atomic(&manifest_path, |out| {
        serde_json::to_writer_pretty(&mut *out, &manifest)?;
        out.write_all(b"\n")
    })
    .map_err(|e| CorpusError::io(&manifest_path, e))?;
    Ok(manifest)
}

pub fn read_dictionary(path: &Path) -> Result<TermDictionary, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let terms: Vec<String> =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| format_error(path, e.to_string()))?;
    TermDictionary::from_terms(terms)
}

pub fn read_manifest(dir: &Path) -> Result<CorpusManifest, CorpusError> {
    let path = dir.join(MANIFEST_FILE);
    let file = File::open(&path).map_err(|e| CorpusError::io(&path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| format_error(&path, e.to_string()))
}

/// Loads a corpus directory, checking the dictionary against the manifest hash.
pub fn read_corpus_dir(dir: &Path) -> Result<(Corpus, CorpusManifest), CorpusError> {
    let manifest = read_manifest(dir)?;
    let dict_path = dir.join(DICTIONARY_FILE);
    let dictionary = read_dictionary(&dict_path)?;
    if dictionary.fingerprint() != manifest.vocab_hash {
        return Err(format_error(&dict_path, "dictionary does not match the manifest's vocabulary hash"));
    }

    let mut groups: BTreeMap<QueryId, Vec<SparseDoc>> = BTreeMap::new();
    let mut loose = Vec::new();
    let corpus_path = dir.join(CORPUS_FILE);
    for doc in DocStream::open(&corpus_path, InputFormat::Jsonl, &dictionary, UnknownTerms::Reject)? {
        let doc = doc?;
        match &doc.query {
            Some(q) => groups.entry(q.clone()).or_default().push(doc),
            None => loose.push(doc),
        }
    }

    let result_sets: Vec<ResultSet> = groups
        .into_iter()
        .map(|(q, mut docs)| {
            docs.sort_by(|a, b| a.id.cmp(&b.id));
            ResultSet::new(q, docs)
        })
        .collect();
    loose.sort_by(|a, b| a.id.cmp(&b.id));

    let mut ids: Vec<&str> = result_sets
        .iter()
        .flat_map(|rs| rs.doc_ids())
        .chain(loose.iter().map(|d| d.id.as_str()))
        .collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(CorpusError::DuplicateId(w[0].to_string()));
    }
    drop(ids);

    let corpus = Corpus {
        dictionary,
        result_sets,
        loose,
    };
    if corpus.document_count() != manifest.document_count {
        return Err(format_error(
            &corpus_path,
            format!(
                "manifest lists {} documents, file holds {}",
                manifest.document_count,
                corpus.document_count()
            ),
        ));
    }
    Ok((corpus, manifest))
}
