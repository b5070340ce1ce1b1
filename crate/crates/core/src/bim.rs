//! Binary independence model: relevance-based estimates of a term's
//! occurrence probability and its log-odds weight.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::index::InvertedIndex;
use crate::{Error, RankedList, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelevanceJudgments {
    pub relevant: BTreeSet<String>,
    /// Corpus size; taken from the index when judgments are read from a file.
    #[serde(skip)]
    pub n_docs: usize,
}

impl RelevanceJudgments {
    pub fn new(relevant: impl IntoIterator<Item = String>, n_docs: usize) -> Result<Self> {
        let relevant: BTreeSet<String> = relevant.into_iter().collect();
        if relevant.len() > n_docs {
            return Err(Error::InvalidArgument(format!(
                "{} relevant documents in a corpus of {n_docs}",
                relevant.len()
            )));
        }
        Ok(RelevanceJudgments { relevant, n_docs })
    }

    /// Parses `{"relevant": [...]}` and checks every id against `index`.
    pub fn from_json(input: &str, index: &InvertedIndex) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct File {
            relevant: Vec<String>,
        }
        let file: File = serde_json::from_str(input).map_err(|e| Error::json(input, &e))?;
        if let Some(unknown) = file.relevant.iter().find(|id| !index.contains_doc(id)) {
            return Err(Error::UnknownDocument(unknown.clone()));
        }
        RelevanceJudgments::new(file.relevant, index.n_docs())
    }

    /// R, the number of judged-relevant documents.
    pub fn n_relevant(&self) -> usize {
        self.relevant.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermRelevanceStats {
    /// Documents containing the term.
    pub n: usize,
    /// Relevant documents containing the term.
    pub r: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Smoothing {
    /// `r/R` and `(n−r)/(N−R)`.
    Raw,
    /// Adds 0.5 to each count and 1 to each denominator.
    #[default]
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermWeight {
    pub p_k: f64,
    pub u_k: f64,
    /// Odds of the term in relevant documents, `P_k / (1 − P_k)`.
    pub relevant_odds: f64,
    /// Odds of the term in non-relevant documents, `U_k / (1 − U_k)`.
    pub nonrelevant_odds: f64,
    pub odds_ratio: f64,
    pub log_weight: f64,
}

/// Estimates `(P_k, U_k)`.
pub fn estimate(stats: TermRelevanceStats, judgments: &RelevanceJudgments, smoothing: Smoothing) -> Result<(f64, f64)> {
    let TermRelevanceStats { n, r } = stats;
    let big_r = judgments.n_relevant();
    let big_n = judgments.n_docs;
    if n > big_n || r > n || r > big_r || big_r > big_n || n - r > big_n - big_r {
        return Err(Error::InvalidArgument(format!(
            "inconsistent counts N={big_n} n={n} R={big_r} r={r}"
        )));
    }
    match smoothing {
        Smoothing::Raw => {
            if big_r == 0 || big_n == big_r {
                return Err(Error::DegenerateJudgments);
            }
            Ok((r as f64 / big_r as f64, (n - r) as f64 / (big_n - big_r) as f64))
        }
        Smoothing::Half => Ok((
            (r as f64 + 0.5) / (big_r as f64 + 1.0),
            ((n - r) as f64 + 0.5) / ((big_n - big_r) as f64 + 1.0),
        )),
    }
}

/// Odds ratio and natural-log weight of a term. `P_k = 0` yields a zero odds
/// ratio and a log weight of −∞.
pub fn term_weight(p_k: f64, u_k: f64) -> Result<TermWeight> {
    if !(0.0..=1.0).contains(&p_k) || !(0.0..=1.0).contains(&u_k) {
        return Err(Error::InvalidArgument(format!("probabilities out of range: P={p_k} U={u_k}")));
    }
    if u_k == 0.0 || p_k == 1.0 {
        return Err(Error::InfiniteOdds);
    }
    if u_k == 1.0 {
        return Err(Error::InvalidArgument("U_k = 1 gives zero odds; use smoothing".into()));
    }
    let relevant_odds = p_k / (1.0 - p_k);
    let nonrelevant_odds = u_k / (1.0 - u_k);
    let odds_ratio = relevant_odds / nonrelevant_odds;
    // Computed from the same product as the ratio so P_k = U_k gives exactly 0.
    let log_weight = (p_k * (1.0 - u_k)).ln() - (u_k * (1.0 - p_k)).ln();
    Ok(TermWeight {
        p_k,
        u_k,
        relevant_odds,
        nonrelevant_odds,
        odds_ratio,
        log_weight,
    })
}

/// Relevance counts of `term` under `judgments`.
pub fn term_stats(index: &InvertedIndex, term: &str, judgments: &RelevanceJudgments) -> TermRelevanceStats {
    let postings = index.postings(term).unwrap_or(&[]);
    TermRelevanceStats {
        n: postings.len(),
        r: postings
            .iter()
            .filter(|p| judgments.relevant.contains(&p.doc_id))
            .count(),
    }
}

/// Per-term weights for the distinct, indexed `query_terms`.
pub fn query_term_weights(
    index: &InvertedIndex,
    query_terms: &[String],
    judgments: &RelevanceJudgments,
    smoothing: Smoothing,
) -> Result<BTreeMap<String, TermWeight>> {
    if let Some(unknown) = judgments.relevant.iter().find(|id| !index.contains_doc(id)) {
        return Err(Error::UnknownDocument(unknown.clone()));
    }
    let judgments = RelevanceJudgments {
        relevant: judgments.relevant.clone(),
        n_docs: index.n_docs(),
    };
    let mut weights = BTreeMap::new();
    for term in query_terms.iter().collect::<BTreeSet<_>>() {
        let stats = term_stats(index, term, &judgments);
        if stats.n == 0 {
            continue;
        }
        let (p, u) = estimate(stats, &judgments, smoothing)?;
        weights.insert(term.clone(), term_weight(p, u)?);
    }
    Ok(weights)
}

/// Ranks documents by the sum of log-odds weights of the query terms they
/// contain. Documents scoring ≤ 0 are omitted.
pub fn rank_bim(
    index: &InvertedIndex,
    query_terms: &[String],
    judgments: &RelevanceJudgments,
    smoothing: Smoothing,
    k: usize,
) -> Result<RankedList> {
    if query_terms.is_empty() {
        return Err(Error::InvalidArgument("at least one query term is required".into()));
    }
    let weights = query_term_weights(index, query_terms, judgments, smoothing)?;
    let mut scores: BTreeMap<&str, f64> = BTreeMap::new();
    for (term, weight) in &weights {
        for posting in index.postings(term).unwrap_or(&[]) {
            *scores.entry(&posting.doc_id).or_insert(0.0) += weight.log_weight;
        }
    }
    Ok(RankedList::top_k(
        scores.into_iter().map(|(id, s)| (id.to_string(), s)),
        k,
    ))
}
