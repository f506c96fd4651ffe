use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use super::{tokenize, Category, Corpus, CorpusError, QueryId, ResultSet, SparseDoc, TermDictionary, TermId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Tsv,
}

impl InputFormat {
    /// Guesses from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("tab") => InputFormat::Tsv,
            _ => InputFormat::Jsonl,
        }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "jsonl" => Ok(InputFormat::Jsonl),
            "tsv" => Ok(InputFormat::Tsv),
            other => Err(format!("unknown input format {other:?} (expected jsonl or tsv)")),
        }
    }
}

/// One input record before term interning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: String,
    pub tokens: Vec<(String, u32)>,
    pub label: Option<Category>,
    pub query: Option<String>,
}

#[derive(Deserialize)]
struct JsonRecord<'a> {
    #[serde(borrow)]
    id: Cow<'a, str>,
    #[serde(default, borrow)]
    tokens: Option<HashMap<Cow<'a, str>, i64>>,
    #[serde(default, borrow)]
    text: Option<Cow<'a, str>>,
    #[serde(default, borrow)]
    label: Option<Cow<'a, str>>,
    #[serde(default, borrow)]
    query: Option<Cow<'a, str>>,
}

fn parse_label(label: Option<&str>, line: usize) -> Result<Option<Category>, CorpusError> {
    match label {
        None | Some("") => Ok(None),
        Some(tag) => tag.parse().map(Some).map_err(|_| CorpusError::UnknownLabel {
            line,
            label: tag.to_string(),
        }),
    }
}

fn count_tokens(tokens: impl Iterator<Item = String>) -> Vec<(String, u32)> {
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    counts.into_iter().collect()
}

/// Parses one line. Blank lines yield `Ok(None)`.
pub fn parse_record(line: &str, line_no: usize, format: InputFormat) -> Result<Option<RawRecord>, CorpusError> {
    let trimmed = line.trim_end_matches(['\n', '\r']);
    if trimmed.trim().is_empty() {
        return Ok(None);
    }
    let malformed = |message: String| CorpusError::Malformed { line: line_no, message };
    match format {
        InputFormat::Jsonl => {
            let rec: JsonRecord<'_> = serde_json::from_str(trimmed).map_err(|e| malformed(e.to_string()))?;
            let tokens = match (rec.tokens, rec.text) {
                (Some(_), Some(_)) => return Err(malformed("record has both tokens and text".into())),
                (None, None) => return Err(malformed("record has neither tokens nor text".into())),
                (Some(map), None) => {
                    let mut tokens = Vec::with_capacity(map.len());
                    for (term, tf) in map {
                        if tf < 0 || tf > i64::from(u32::MAX) {
                            return Err(malformed(format!("term frequency {tf} for {term:?} out of range")));
                        }
                        if tf > 0 {
                            tokens.push((term.into_owned(), tf as u32));
                        }
                    }
                    tokens.sort_unstable();
                    tokens
                }
                (None, Some(text)) => count_tokens(tokenize(&text)),
            };
            if rec.id.is_empty() {
                return Err(malformed("empty id".into()));
            }
            Ok(Some(RawRecord {
                id: rec.id.into_owned(),
                tokens,
                label: parse_label(rec.label.as_deref(), line_no)?,
                query: rec.query.filter(|q| !q.is_empty()).map(Cow::into_owned),
            }))
        }
        InputFormat::Tsv => {
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 4 {
                return Err(malformed(format!("expected 4 tab-separated fields, found {}", fields.len())));
            }
            if fields[0].is_empty() {
                return Err(malformed("empty id".into()));
            }
            Ok(Some(RawRecord {
                id: fields[0].to_string(),
                query: (!fields[1].is_empty()).then(|| fields[1].to_string()),
                label: parse_label(Some(fields[2]), line_no)?,
                tokens: count_tokens(fields[3].split(' ').filter(|t| !t.is_empty()).map(str::to_string)),
            }))
        }
    }
}

/// Streams records from a line-oriented reader.
pub struct RecordReader<R> {
    reader: R,
    format: InputFormat,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R, format: InputFormat) -> Self {
        Self {
            reader,
            format,
            line_no: 0,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<RawRecord, CorpusError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.reader.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => match parse_record(&self.buf, self.line_no, self.format) {
                    Ok(Some(rec)) => return Some(Ok(rec)),
                    Ok(None) => continue,
                    Err(e) => return Some(Err(e)),
                },
                Err(e) => {
                    return Some(Err(CorpusError::Malformed {
                        line: self.line_no,
                        message: e.to_string(),
                    }))
                }
            }
        }
    }
}

/// Reads a corpus file, interning terms into a lexicographically ordered dictionary.
pub fn ingest(path: impl AsRef<Path>, format: InputFormat) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    ingest_reader(BufReader::new(file), format)
}

/// Builds a canonical corpus: result sets ordered by query id, documents by
/// doc id, and term ids in lexicographic term order. The result does not
/// depend on record order in the input.
pub fn ingest_reader<R: BufRead>(reader: R, format: InputFormat) -> Result<Corpus, CorpusError> {
    let mut dictionary = TermDictionary::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut groups: BTreeMap<String, Vec<SparseDoc>> = BTreeMap::new();
    let mut loose = Vec::new();

    for record in RecordReader::new(reader, format) {
        let record = record?;
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateId(record.id));
        }
        let terms: Vec<(TermId, u32)> = record
            .tokens
            .iter()
            .map(|(t, tf)| (dictionary.intern(t), *tf))
            .collect();
        let mut doc = SparseDoc::new(record.id, terms);
        doc.label = record.label;
        match record.query {
            Some(q) => groups.entry(q).or_default().push(doc),
            None => loose.push(doc),
        }
    }

    let (sorted, remap) = dictionary.sorted();
    let relabel = |doc: SparseDoc, query: Option<&QueryId>| {
        let terms: Vec<(TermId, u32)> = doc.terms().iter().map(|&(t, tf)| (remap[t.index()], tf)).collect();
        let mut out = SparseDoc::new(doc.id, terms);
        out.label = doc.label;
        out.query = query.cloned();
        out
    };

    let result_sets = groups
        .into_iter()
        .map(|(q, docs)| {
            let qid: QueryId = Arc::from(q.as_str());
            let mut docs: Vec<SparseDoc> = docs.into_iter().map(|d| relabel(d, Some(&qid))).collect();
            docs.sort_by(|a, b| a.id.cmp(&b.id));
            ResultSet::new(qid, docs)
        })
        .collect();
    let mut loose: Vec<SparseDoc> = loose.into_iter().map(|d| relabel(d, None)).collect();
    loose.sort_by(|a, b| a.id.cmp(&b.id));

    Ok(Corpus {
        dictionary: sorted,
        result_sets,
        loose,
    })
}

struct TokenMap<'a> {
    terms: &'a [(TermId, u32)],
    dictionary: &'a TermDictionary,
}

impl Serialize for TokenMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.terms.len()))?;
        for &(t, tf) in self.terms {
            map.serialize_entry(self.dictionary.term(t), &tf)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct JsonOut<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    query: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<Category>,
    tokens: TokenMap<'a>,
}

pub(crate) fn write_json_doc<W: Write + ?Sized>(out: &mut W, doc: &SparseDoc, dictionary: &TermDictionary) -> std::io::Result<()> {
    let rec = JsonOut {
        id: &doc.id,
        query: doc.query.as_deref(),
        label: doc.label,
        tokens: TokenMap {
            terms: doc.terms(),
            dictionary,
        },
    };
    serde_json::to_writer(&mut *out, &rec)?;
    out.write_all(b"\n")
}

/// Writes every document as one canonical JSONL record.
pub fn write_jsonl<W: Write>(mut out: W, corpus: &Corpus) -> std::io::Result<()> {
    for doc in corpus.documents() {
        write_json_doc(&mut out, doc, &corpus.dictionary)?;
    }
    out.flush()
}

/// Writes `id<TAB>query<TAB>label<TAB>tokens`, repeating each token tf times.
pub fn write_tsv<W: Write>(mut out: W, corpus: &Corpus) -> std::io::Result<()> {
    for doc in corpus.documents() {
        let tokens: Vec<&str> = doc
            .terms()
            .iter()
            .flat_map(|&(t, tf)| std::iter::repeat(corpus.dictionary.term(t)).take(tf as usize))
            .collect();
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            doc.id,
            doc.query.as_deref().unwrap_or(""),
            doc.label.map_or("", Category::tag),
            tokens.join(" ")
        )?;
    }
    out.flush()
}
