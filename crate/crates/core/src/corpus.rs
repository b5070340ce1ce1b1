//! Document loading, tokenization and term statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "in",
    "is", "it", "its", "of", "on", "or", "that", "the", "their", "this", "to", "was", "were",
    "which", "will", "with",
];

/// Stems shorter than this are never produced by suffix stripping.
const MIN_STEM_LEN: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MediaType {
    #[default]
    Text,
    Image,
    Video,
    Audio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Title,
    Body,
    Caption,
}

impl Field {
    pub const ALL: [Field; 3] = [Field::Title, Field::Body, Field::Caption];

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Title => "title",
            Field::Body => "body",
            Field::Caption => "caption",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub body: String,
    #[serde(default)]
    pub caption: String,
    #[serde(default)]
    pub media_type: MediaType,
    #[serde(default)]
    pub concepts: BTreeSet<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, body: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            body: body.into(),
            ..Default::default()
        }
    }

    pub fn field(&self, field: Field) -> &str {
        match field {
            Field::Title => &self.title,
            Field::Body => &self.body,
            Field::Caption => &self.caption,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub stopwords: BTreeSet<String>,
    pub stem: bool,
    pub min_token_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            stem: true,
            min_token_len: 1,
        }
    }
}

impl TokenizerConfig {
    pub fn new(stopwords: impl IntoIterator<Item = String>, stem: bool, min_token_len: usize) -> Result<Self> {
        if min_token_len == 0 {
            return Err(Error::InvalidArgument("min_token_len must be at least 1".into()));
        }
        Ok(TokenizerConfig {
            stopwords: stopwords.into_iter().collect(),
            stem,
            min_token_len,
        })
    }

    /// Replaces the stopword list with the contents of `path`, one word per line.
    pub fn with_stopword_file(mut self, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.stopwords = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        Ok(self)
    }

    fn keep(&self, term: &str) -> bool {
        term.chars().count() >= self.min_token_len && !self.stopwords.contains(term)
    }
}

/// Lowercases `text`, splits it on every non-alphanumeric character, drops
/// stopwords and short tokens and, when enabled, strips plural and verb
/// suffixes.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split(|c: char| !c.is_alphanumeric()) {
        if raw.is_empty() {
            continue;
        }
        let lowered = raw.to_lowercase();
        // Lowercasing can introduce combining marks, so split once more.
        for piece in lowered.split(|c: char| !c.is_alphanumeric()) {
            if piece.is_empty() || config.stopwords.contains(piece) {
                continue;
            }
            let term = if config.stem { stem(piece) } else { piece.to_string() };
            if config.keep(&term) {
                out.push(term);
            }
        }
    }
    out
}

/// Light suffix stripping ("ing", "ed", "es", "s"), repeated until no rule
/// applies so that `stem(stem(w)) == stem(w)`.
pub fn stem(word: &str) -> String {
    let mut current = word.to_string();
    while let Some(next) = strip_once(&current) {
        current = next;
    }
    current
}

fn strip_once(word: &str) -> Option<String> {
    let len = word.chars().count();
    for suffix in ["ing", "ed", "es", "s"] {
        if !word.ends_with(suffix) || len - suffix.len() < MIN_STEM_LEN {
            continue;
        }
        if suffix == "s" && word.ends_with("ss") {
            continue;
        }
        return Some(word[..word.len() - suffix.len()].to_string());
    }
    None
}

/// Term frequencies of `text` keyed by term.
pub fn term_counts(text: &str, config: &TokenizerConfig) -> BTreeMap<String, u32> {
    let mut counts = BTreeMap::new();
    for term in tokenize(text, config) {
        *counts.entry(term).or_insert(0) += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Phrase {
    pub terms: (String, String),
    pub df: usize,
}

/// Adjacent bigrams whose document frequency reaches `min_df`, sorted by terms.
pub fn extract_phrases(token_lists: &[Vec<String>], min_df: usize) -> Result<Vec<Phrase>> {
    if min_df == 0 {
        return Err(Error::InvalidArgument("min_df must be at least 1".into()));
    }
    let mut df: BTreeMap<(&str, &str), usize> = BTreeMap::new();
    for tokens in token_lists {
        let seen: BTreeSet<(&str, &str)> = tokens
            .windows(2)
            .map(|w| (w[0].as_str(), w[1].as_str()))
            .collect();
        for bigram in seen {
            *df.entry(bigram).or_insert(0) += 1;
        }
    }
    Ok(df
        .into_iter()
        .filter(|(_, n)| *n >= min_df)
        .map(|((a, b), n)| Phrase {
            terms: (a.to_string(), b.to_string()),
            df: n,
        })
        .collect())
}

/// Splits `text` into `k` contiguous whitespace-aligned segments, tokenizes
/// them in parallel and merges the counts.
pub fn ingest_segmented(text: &str, k: usize, config: &TokenizerConfig) -> Result<BTreeMap<String, u32>> {
    if k == 0 {
        return Err(Error::InvalidArgument("segment count must be at least 1".into()));
    }
    let segments = segment(text, k);
    let merged = segments
        .par_iter()
        .map(|s| term_counts(s, config))
        .reduce(BTreeMap::new, |mut acc, counts| {
            for (term, n) in counts {
                *acc.entry(term).or_insert(0) += n;
            }
            acc
        });
    Ok(merged)
}

fn segment(text: &str, k: usize) -> Vec<&str> {
    let mut segments = Vec::with_capacity(k);
    let mut start = 0;
    for i in 1..k {
        let cut = next_whitespace(text, (text.len() * i / k).max(start));
        segments.push(&text[start..cut]);
        start = cut;
    }
    segments.push(&text[start..]);
    segments
}

fn next_whitespace(text: &str, from: usize) -> usize {
    text.char_indices()
        .skip_while(|(i, _)| *i < from)
        .find(|(_, c)| c.is_whitespace())
        .map_or(text.len(), |(i, _)| i)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    pub df: usize,
    pub total_tf: u64,
}

/// Per-field term counts of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocTerms {
    pub fields: BTreeMap<Field, BTreeMap<String, u32>>,
}

impl DocTerms {
    pub fn analyze(doc: &Document, config: &TokenizerConfig) -> Self {
        let fields = Field::ALL
            .iter()
            .map(|&f| (f, term_counts(doc.field(f), config)))
            .filter(|(_, counts)| !counts.is_empty())
            .collect();
        DocTerms { fields }
    }

    /// Counts summed over all fields.
    pub fn totals(&self) -> BTreeMap<String, u32> {
        let mut totals = BTreeMap::new();
        for counts in self.fields.values() {
            for (term, n) in counts {
                *totals.entry(term.clone()).or_insert(0) += n;
            }
        }
        totals
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    documents: Vec<Document>,
    doc_terms: Vec<DocTerms>,
    term_stats: BTreeMap<String, TermStats>,
}

impl Corpus {
    /// Builds a corpus from in-memory documents, sorted by id.
    pub fn from_documents(mut documents: Vec<Document>, config: &TokenizerConfig) -> Result<Self> {
        documents.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in documents.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::InvalidArgument(format!("duplicate document id {:?}", pair[0].id)));
            }
        }
        if let Some(doc) = documents.iter().find(|d| d.id.is_empty()) {
            return Err(Error::InvalidArgument(format!("empty document id (title {:?})", doc.title)));
        }
        let doc_terms: Vec<DocTerms> = documents
            .par_iter()
            .map(|d| DocTerms::analyze(d, config))
            .collect();
        let mut term_stats: BTreeMap<String, TermStats> = BTreeMap::new();
        for terms in &doc_terms {
            for (term, n) in terms.totals() {
                let stats = term_stats.entry(term).or_default();
                stats.df += 1;
                stats.total_tf += u64::from(n);
            }
        }
        Ok(Corpus {
            documents,
            doc_terms,
            term_stats,
        })
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.position(id).map(|i| &self.documents[i])
    }

    pub fn doc_terms(&self, id: &str) -> Option<&DocTerms> {
        self.position(id).map(|i| &self.doc_terms[i])
    }

    /// Documents paired with their analyzed terms, in id order.
    pub fn iter(&self) -> impl Iterator<Item = (&Document, &DocTerms)> {
        self.documents.iter().zip(&self.doc_terms)
    }

    pub fn term_stats(&self) -> &BTreeMap<String, TermStats> {
        &self.term_stats
    }

    /// Bigram phrases over each document's title, body and caption tokens.
    pub fn phrases(&self, config: &TokenizerConfig, min_df: usize) -> Result<Vec<Phrase>> {
        let lists: Vec<Vec<String>> = self
            .documents
            .iter()
            .map(|d| {
                Field::ALL
                    .iter()
                    .flat_map(|&f| tokenize(d.field(f), config))
                    .collect()
            })
            .collect();
        extract_phrases(&lists, min_df)
    }

    fn position(&self, id: &str) -> Option<usize> {
        self.documents.binary_search_by(|d| d.id.as_str().cmp(id)).ok()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    title: Option<String>,
    caption: Option<String>,
    media_type: Option<MediaType>,
    concepts: Option<Vec<String>>,
}

/// Result of loading a corpus directory. Files that could not be read are
/// reported in `errors`; the rest of the directory is still ingested.
#[derive(Debug)]
pub struct Ingested {
    pub corpus: Corpus,
    pub errors: Vec<Error>,
}

/// Loads every `*.txt` file in `dir` together with its optional
/// `<stem>.meta.json` sidecar.
pub fn ingest_corpus(dir: impl AsRef<Path>, config: &TokenizerConfig) -> Result<Ingested> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().is_some_and(|ext| ext == "txt") && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();

    let loaded: Vec<Result<Document>> = paths.par_iter().map(|p| load_document(p)).collect();
    let mut documents = Vec::new();
    let mut errors = Vec::new();
    for result in loaded {
        match result {
            Ok(doc) => documents.push(doc),
            Err(err @ Error::Sidecar { .. }) => return Err(err),
            Err(err) => errors.push(err),
        }
    }
    let corpus = Corpus::from_documents(documents, config)?;
    Ok(Ingested { corpus, errors })
}

fn load_document(path: &Path) -> Result<Document> {
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Sidecar {
            path: path.to_path_buf(),
            message: "file name is not a valid document id".into(),
        })?
        .to_string();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let body = String::from_utf8(bytes).map_err(|e| {
        Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    })?;

    let mut doc = Document::new(id.clone(), body);
    let sidecar_path = path.with_file_name(format!("{id}.meta.json"));
    if sidecar_path.exists() {
        let text = fs::read_to_string(&sidecar_path).map_err(|e| Error::Sidecar {
            path: sidecar_path.clone(),
            message: e.to_string(),
        })?;
        let sidecar: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Sidecar {
            path: sidecar_path.clone(),
            message: e.to_string(),
        })?;
        doc.title = sidecar.title.unwrap_or_default();
        doc.caption = sidecar.caption.unwrap_or_default();
        doc.media_type = sidecar.media_type.unwrap_or_default();
        doc.concepts = sidecar.concepts.unwrap_or_default().into_iter().collect();
    }
    Ok(doc)
}
