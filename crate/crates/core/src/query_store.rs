//! Persistent queries kept in an append-only NDJSON file, with cosine
//! similarity lookup for reuse.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::expansion::WeightedQuery;
use crate::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersistentQuery {
    pub id: String,
    pub created_at: u64,
    pub vector: BTreeMap<String, f64>,
    #[serde(rename = "results")]
    pub result_doc_ids: Vec<String>,
}

/// Cosine similarity of two term-weight vectors.
pub fn similarity(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    let norm = |v: &BTreeMap<String, f64>| v.values().map(|w| w * w).sum::<f64>();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a
        .iter()
        .filter_map(|(t, wa)| b.get(t).map(|wb| wa * wb))
        .sum();
    (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
}

/// Stored queries in id order. Writes go through `&mut self`; share the store
/// behind a lock to get a single writer with concurrent readers.
#[derive(Debug, Default)]
pub struct QueryStore {
    path: Option<PathBuf>,
    entries: Vec<PersistentQuery>,
    last_id: u64,
}

impl QueryStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the store at `path`, loading any existing entries.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut store = QueryStore {
            path: Some(path.clone()),
            ..Default::default()
        };
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(store),
            Err(e) => return Err(Error::io(path, e)),
        };
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: PersistentQuery = serde_json::from_str(line).map_err(|e| Error::Json {
                offset: text.lines().take(lineno).map(|l| l.len() + 1).sum::<usize>() + e.column().saturating_sub(1),
                message: format!("{}: line {}: {e}", path.display(), lineno + 1),
            })?;
            let id: u64 = entry
                .id
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("{}: non-numeric query id {:?}", path.display(), entry.id)))?;
            store.last_id = store.last_id.max(id);
            store.entries.push(entry);
        }
        Ok(store)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn entries(&self) -> &[PersistentQuery] {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<&PersistentQuery> {
        self.entries.iter().find(|q| q.id == id)
    }

    pub fn save(&mut self, vector: &WeightedQuery, results: Vec<String>) -> Result<&PersistentQuery> {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        self.save_at(vector, results, now)
    }

    /// Appends a query with the next id and the given timestamp.
    pub fn save_at(&mut self, vector: &WeightedQuery, results: Vec<String>, created_at: u64) -> Result<&PersistentQuery> {
        if vector.is_empty() {
            return Err(Error::InvalidArgument("cannot store an empty query vector".into()));
        }
        let entry = PersistentQuery {
            id: (self.last_id + 1).to_string(),
            created_at,
            vector: vector.weights.clone(),
            result_doc_ids: results,
        };
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&entry).expect("query serialization is infallible");
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            file.write_all(line.as_bytes())
                .and_then(|()| file.sync_data())
                .map_err(|e| Error::io(path, e))?;
        }
        self.last_id += 1;
        self.entries.push(entry);
        Ok(self.entries.last().expect("just pushed"))
    }

    /// The most similar stored query with similarity ≥ `tau`; ties go to the
    /// most recent entry.
    pub fn find_reusable(&self, query: &WeightedQuery, tau: f64) -> Result<Option<(&PersistentQuery, f64)>> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("tau must lie in [0, 1], got {tau}")));
        }
        let mut best: Option<(&PersistentQuery, f64)> = None;
        for entry in &self.entries {
            let sim = similarity(&query.weights, &entry.vector);
            if sim >= tau && best.is_none_or(|(_, s)| sim >= s) {
                best = Some((entry, sim));
            }
        }
        Ok(best)
    }
}
