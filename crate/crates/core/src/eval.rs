//! Precision and recall at a rank cutoff.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query: String,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub queries: Vec<QueryMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

/// Parses a qrels file: a JSON object mapping query strings to relevant doc ids.
pub fn parse_qrels(input: &str) -> Result<BTreeMap<String, BTreeSet<String>>> {
    serde_json::from_str(input).map_err(|e| Error::json(input, &e))
}

/// `P@k = |top-k ∩ rel| / k` and `R@k = |top-k ∩ rel| / |rel|` (0 when `rel`
/// is empty), averaged over queries.
pub fn evaluate_rankings(
    rankings: &[(String, Vec<String>)],
    qrels: &BTreeMap<String, BTreeSet<String>>,
    k: usize,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut queries = Vec::with_capacity(rankings.len());
    for (query, ranking) in rankings {
        let relevant = qrels.get(query).ok_or_else(|| Error::MissingQrels(query.clone()))?;
        let hits = ranking.iter().take(k).filter(|d| relevant.contains(*d)).count() as f64;
        queries.push(QueryMetrics {
            query: query.clone(),
            precision: hits / k as f64,
            recall: if relevant.is_empty() { 0.0 } else { hits / relevant.len() as f64 },
        });
    }
    let mean = |f: fn(&QueryMetrics) -> f64| {
        if queries.is_empty() {
            0.0
        } else {
            queries.iter().map(f).sum::<f64>() / queries.len() as f64
        }
    };
    Ok(EvalReport {
        k,
        macro_precision: mean(|q| q.precision),
        macro_recall: mean(|q| q.recall),
        queries,
    })
}
