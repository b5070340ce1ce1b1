use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub doc_id: String,
    pub score: f64,
}

/// Documents ordered by descending score, ties broken by ascending doc id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RankedList(Vec<ScoredDoc>);

impl RankedList {
    /// Sorts `scored` under the ranking order, drops entries whose score is
    /// not strictly positive and keeps at most `k`.
    pub fn top_k(scored: impl IntoIterator<Item = (String, f64)>, k: usize) -> Self {
        let mut docs: Vec<ScoredDoc> = scored
            .into_iter()
            .filter(|(_, score)| *score > 0.0)
            .map(|(doc_id, score)| ScoredDoc { doc_id, score })
            .collect();
        docs.sort_by(rank_order);
        docs.truncate(k);
        RankedList(docs)
    }

    pub fn as_slice(&self) -> &[ScoredDoc] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ScoredDoc> {
        self.0.iter()
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.0.iter().map(|d| d.doc_id.clone()).collect()
    }

    pub fn into_vec(self) -> Vec<ScoredDoc> {
        self.0
    }
}

impl<'a> IntoIterator for &'a RankedList {
    type Item = &'a ScoredDoc;
    type IntoIter = std::slice::Iter<'a, ScoredDoc>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

fn rank_order(a: &ScoredDoc, b: &ScoredDoc) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_score_then_id_and_drops_zero() {
        let ranked = RankedList::top_k(
            vec![
                ("b".to_string(), 0.5),
                ("a".to_string(), 0.5),
                ("c".to_string(), 0.9),
                ("d".to_string(), 0.0),
            ],
            10,
        );
        assert_eq!(ranked.doc_ids(), vec!["c", "a", "b"]);
    }

    #[test]
    fn truncates_to_k() {
        let ranked = RankedList::top_k((0..5).map(|i| (format!("d{i}"), 1.0)), 2);
        assert_eq!(ranked.doc_ids(), vec!["d0", "d1"]);
    }
}
