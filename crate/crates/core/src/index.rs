//! Inverted index with tf·idf document weights and a JSON snapshot format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::corpus::Corpus;
use crate::{Error, Result};

pub const SNAPSHOT_VERSION: &str = "mirstat-index/1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub doc_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InvertedIndex {
    n_docs: usize,
    postings: BTreeMap<String, Vec<Posting>>,
    /// Normalization denominator per document: the largest tf·idf of any of
    /// its terms. Zero for documents without terms and for documents whose
    /// terms all occur in every document.
    doc_max_tfidf: BTreeMap<String, f64>,
}

/// Builds the index for `corpus`. Postings are sorted by doc id.
pub fn build_index(corpus: &Corpus) -> InvertedIndex {
    let n_docs = corpus.len();
    let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    let totals: Vec<(String, BTreeMap<String, u32>)> = corpus
        .iter()
        .map(|(doc, terms)| (doc.id.clone(), terms.totals()))
        .collect();
    for (doc_id, counts) in &totals {
        for (term, &tf) in counts {
            postings.entry(term.clone()).or_default().push(Posting {
                doc_id: doc_id.clone(),
                tf,
            });
        }
    }
    let doc_max_tfidf = totals
        .iter()
        .map(|(doc_id, counts)| {
            let max = counts
                .iter()
                .map(|(term, &tf)| f64::from(tf) * ln_ratio(n_docs, postings[term].len()))
                .fold(0.0, f64::max);
            (doc_id.clone(), max)
        })
        .collect();
    InvertedIndex {
        n_docs,
        postings,
        doc_max_tfidf,
    }
}

fn ln_ratio(n_docs: usize, df: usize) -> f64 {
    (n_docs as f64 / df as f64).ln()
}

impl InvertedIndex {
    /// Corpus size N.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn df(&self, term: &str) -> usize {
        self.postings.get(term).map_or(0, Vec::len)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.doc_max_tfidf.keys().map(String::as_str)
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_max_tfidf.contains_key(doc_id)
    }

    pub fn doc_max_tfidf(&self, doc_id: &str) -> Option<f64> {
        self.doc_max_tfidf.get(doc_id).copied()
    }

    /// Frequency of `term` in `doc_id`, zero when absent.
    pub fn tf(&self, doc_id: &str, term: &str) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| {
                list.binary_search_by(|p| p.doc_id.as_str().cmp(doc_id))
                    .ok()
                    .map(|i| list[i].tf)
            })
            .unwrap_or(0)
    }

    /// `ln(N / df)`.
    pub fn idf(&self, term: &str) -> Result<f64> {
        if self.n_docs == 0 {
            return Err(Error::EmptyIndex);
        }
        match self.df(term) {
            0 => Err(Error::TermNotIndexed(term.to_string())),
            df => Ok(ln_ratio(self.n_docs, df)),
        }
    }

    /// tf·idf of `term` in `doc_id` divided by the document's maximum tf·idf.
    pub fn doc_term_weight(&self, doc_id: &str, term: &str) -> Result<f64> {
        let max = self
            .doc_max_tfidf(doc_id)
            .ok_or_else(|| Error::UnknownDocument(doc_id.to_string()))?;
        let tf = self.tf(doc_id, term);
        if tf == 0 || max <= 0.0 {
            return Ok(0.0);
        }
        let tfidf = f64::from(tf) * ln_ratio(self.n_docs, self.df(term));
        Ok((tfidf / max).clamp(0.0, 1.0))
    }

    /// Term frequencies of one document, recovered from the postings.
    pub fn document_terms(&self, doc_id: &str) -> BTreeMap<String, u32> {
        self.postings
            .keys()
            .filter_map(|term| match self.tf(doc_id, term) {
                0 => None,
                tf => Some((term.clone(), tf)),
            })
            .collect()
    }

    /// Forward view of the index: doc id to its term frequencies.
    pub fn forward(&self) -> BTreeMap<String, BTreeMap<String, u32>> {
        let mut forward: BTreeMap<String, BTreeMap<String, u32>> = self
            .doc_max_tfidf
            .keys()
            .map(|id| (id.clone(), BTreeMap::new()))
            .collect();
        for (term, list) in &self.postings {
            for p in list {
                if let Some(counts) = forward.get_mut(&p.doc_id) {
                    counts.insert(term.clone(), p.tf);
                }
            }
        }
        forward
    }

    /// Serializes the index as a single-line JSON snapshot with sorted keys.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        write!(out, "{{\"N\":{},\"docs\":[", self.n_docs).unwrap();
        for (i, (id, max)) in self.doc_max_tfidf.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{{\"id\":{},\"max_tfidf\":{}}}", json_str(id), format_float(*max)).unwrap();
        }
        out.push_str("],\"terms\":{");
        for (i, (term, list)) in self.postings.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{}:{{\"df\":{},\"postings\":[", json_str(term), list.len()).unwrap();
            for (j, p) in list.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "[{},{}]", json_str(&p.doc_id), p.tf).unwrap();
            }
            out.push_str("]}");
        }
        writeln!(out, "}},\"version\":{}}}", json_str(SNAPSHOT_VERSION)).unwrap();
        out
    }

    pub fn from_snapshot(input: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(input).map_err(|e| Error::json(input, &e))?;
        let found = value.get("version").and_then(|v| v.as_str()).unwrap_or("");
        if found != SNAPSHOT_VERSION {
            return Err(Error::Version {
                found: found.to_string(),
                expected: SNAPSHOT_VERSION.to_string(),
            });
        }
        let file: SnapshotFile = serde_json::from_value(value).map_err(|e| Error::Snapshot(e.to_string()))?;
        file.into_index()
    }
}

pub fn save_index(index: &InvertedIndex, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, index.to_snapshot()).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    InvertedIndex::from_snapshot(&text)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotFile {
    #[allow(dead_code)]
    version: String,
    #[serde(rename = "N")]
    n: usize,
    docs: Vec<DocEntry>,
    terms: BTreeMap<String, TermEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocEntry {
    id: String,
    max_tfidf: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    df: usize,
    postings: Vec<(String, u32)>,
}

impl SnapshotFile {
    fn into_index(self) -> Result<InvertedIndex> {
        if self.docs.len() != self.n {
            return Err(Error::Snapshot(format!("N is {} but {} docs are listed", self.n, self.docs.len())));
        }
        let mut doc_max_tfidf = BTreeMap::new();
        for doc in self.docs {
            if !doc.max_tfidf.is_finite() || doc.max_tfidf < 0.0 {
                return Err(Error::Snapshot(format!("invalid max_tfidf for {:?}", doc.id)));
            }
            if doc_max_tfidf.insert(doc.id.clone(), doc.max_tfidf).is_some() {
                return Err(Error::Snapshot(format!("duplicate doc {:?}", doc.id)));
            }
        }
        let mut postings = BTreeMap::new();
        for (term, entry) in self.terms {
            if entry.df != entry.postings.len() || entry.df == 0 {
                return Err(Error::Snapshot(format!("df of {term:?} does not match its postings")));
            }
            let list: Vec<Posting> = entry
                .postings
                .into_iter()
                .map(|(doc_id, tf)| Posting { doc_id, tf })
                .collect();
            for p in &list {
                if p.tf == 0 || !doc_max_tfidf.contains_key(&p.doc_id) {
                    return Err(Error::Snapshot(format!("invalid posting ({:?}, {}) for {term:?}", p.doc_id, p.tf)));
                }
            }
            if list.windows(2).any(|w| w[0].doc_id >= w[1].doc_id) {
                return Err(Error::Snapshot(format!("postings of {term:?} are not sorted")));
            }
            postings.insert(term, list);
        }
        Ok(InvertedIndex {
            n_docs: self.n,
            postings,
            doc_max_tfidf,
        })
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

/// Formats a finite float with 17 significant digits, `%.17g` style.
pub(crate) fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    if !(-5..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let tail = tail.trim_end_matches('0');
        return if tail.is_empty() {
            format!("{sign}{head}e{exp}")
        } else {
            format!("{sign}{head}.{tail}e{exp}")
        };
    }
    let (int_part, frac) = if exp >= 0 {
        let split = exp as usize + 1;
        (digits[..split].to_string(), digits[split..].to_string())
    } else {
        ("0".to_string(), format!("{}{}", "0".repeat((-exp - 1) as usize), digits))
    };
    let frac = frac.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}
