//! Automatic query expansion with local context analysis (LCA) and
//! interactive refinement with the Rocchio formula.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::index::InvertedIndex;
use crate::pnorm::{rank_pnorm, QueryAst, DEFAULT_P};
use crate::{Error, Result};

pub const DEFAULT_PHI: f64 = 0.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    #[default]
    User,
    Expanded,
    Refined,
}

/// Query as a term → weight vector. Weights are always positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WeightedQuery {
    pub weights: BTreeMap<String, f64>,
    pub origin: Origin,
}

impl WeightedQuery {
    pub fn new(weights: BTreeMap<String, f64>, origin: Origin) -> Result<Self> {
        if let Some((term, w)) = weights.iter().find(|(_, w)| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument(format!("term {term:?} has non-positive weight {w}")));
        }
        Ok(WeightedQuery { weights, origin })
    }

    /// Leaf terms of `ast`; repeated terms accumulate their weights.
    pub fn from_ast(ast: &QueryAst) -> Self {
        let mut weights = BTreeMap::new();
        for (term, w) in ast.terms() {
            *weights.entry(term.to_string()).or_insert(0.0) += w;
        }
        WeightedQuery {
            weights,
            origin: Origin::User,
        }
    }

    /// Unit weight per occurrence.
    pub fn from_terms<S: AsRef<str>>(terms: &[S]) -> Self {
        let mut weights = BTreeMap::new();
        for term in terms {
            *weights.entry(term.as_ref().to_string()).or_insert(0.0) += 1.0;
        }
        WeightedQuery {
            weights,
            origin: Origin::User,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Soft OR over the terms, weights rescaled into (0, 1].
    pub fn to_ast(&self, p: f64) -> Result<QueryAst> {
        QueryAst::weighted_or(self.weights.iter().map(|(t, w)| (t.as_str(), *w)), p)
    }

    pub fn terms(&self) -> Vec<(String, f64)> {
        self.weights.iter().map(|(t, w)| (t.clone(), *w)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptCandidate {
    pub concept: String,
    /// Co-occurrence with the query terms, summed over the terms.
    pub af: f64,
    pub belief: f64,
}

/// `af(c, t) = Σ_d ft_{t,d} · f_{c,d}` over the top documents.
pub fn cooccurrence_af(concept: &str, query_term: &str, top_docs: &[BTreeMap<String, u32>]) -> f64 {
    top_docs
        .iter()
        .map(|doc| {
            let ft = doc.get(query_term).copied().unwrap_or(0);
            let fc = doc.get(concept).copied().unwrap_or(0);
            f64::from(ft) * f64::from(fc)
        })
        .sum()
}

/// `Π_i [φ + g(af(c, t_i)) · idf_c / ln n]^{idf_i}` with `n = |top_docs|` and
/// `g(af) = ln af` for `af ≥ 1`, otherwise 0.
pub fn lca_belief(
    query_terms: &[(String, f64)],
    concept: &str,
    idf_c: f64,
    top_docs: &[BTreeMap<String, u32>],
    phi: f64,
) -> Result<f64> {
    if top_docs.len() < 2 {
        return Err(Error::InsufficientTopDocuments);
    }
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(Error::InvalidArgument(format!("phi must be positive, got {phi}")));
    }
    let ln_n = (top_docs.len() as f64).ln();
    Ok(query_terms
        .iter()
        .map(|(term, idf_a)| {
            let af = cooccurrence_af(concept, term, top_docs);
            let g = if af >= 1.0 { af.ln() } else { 0.0 };
            (phi + g * idf_c / ln_n).powf(*idf_a)
        })
        .product())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcaParams {
    pub m_top: usize,
    pub k_concepts: usize,
    pub phi: f64,
}

impl Default for LcaParams {
    fn default() -> Self {
        LcaParams {
            m_top: 10,
            k_concepts: 5,
            phi: DEFAULT_PHI,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub query: WeightedQuery,
    /// Concepts added to the query, highest belief first.
    pub concepts: Vec<ConceptCandidate>,
    /// False when too few documents matched to expand.
    pub expanded: bool,
}

/// Ranks every term of the top `m_top` documents (soft OR, p = 2) that is not
/// already in the query by LCA belief and appends the best `k_concepts`, each
/// weighted by its belief over the best belief.
pub fn expand_lca(index: &InvertedIndex, query: &WeightedQuery, params: LcaParams) -> Result<Expansion> {
    if params.m_top < 2 {
        return Err(Error::InvalidArgument("m_top must be at least 2".into()));
    }
    if params.k_concepts == 0 {
        return Err(Error::InvalidArgument("k_concepts must be at least 1".into()));
    }
    if query.is_empty() {
        return Err(Error::InvalidArgument("cannot expand an empty query".into()));
    }
    let unchanged = || Expansion {
        query: query.clone(),
        concepts: Vec::new(),
        expanded: false,
    };
    let top = rank_pnorm(index, &query.to_ast(DEFAULT_P)?, params.m_top)?;
    if top.len() < 2 {
        return Ok(unchanged());
    }
    let top_docs: Vec<BTreeMap<String, u32>> = top.iter().map(|d| index.document_terms(&d.doc_id)).collect();
    let query_terms: Vec<(String, f64)> = query
        .weights
        .keys()
        .map(|t| (t.clone(), index.idf(t).unwrap_or(0.0)))
        .collect();

    let candidates: BTreeSet<&String> = top_docs
        .iter()
        .flat_map(BTreeMap::keys)
        .filter(|t| !query.weights.contains_key(*t))
        .collect();
    let mut scored = candidates
        .into_iter()
        .map(|concept| {
            let idf_c = index.idf(concept)?;
            let belief = lca_belief(&query_terms, concept, idf_c, &top_docs, params.phi)?;
            let af = query_terms
                .iter()
                .map(|(t, _)| cooccurrence_af(concept, t, &top_docs))
                .sum();
            Ok(ConceptCandidate {
                concept: concept.clone(),
                af,
                belief,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if scored.is_empty() {
        return Ok(unchanged());
    }
    scored.sort_by(|a, b| b.belief.total_cmp(&a.belief).then_with(|| a.concept.cmp(&b.concept)));
    scored.truncate(params.k_concepts);

    let max_belief = scored[0].belief;
    let mut expanded = query.clone();
    expanded.origin = Origin::Expanded;
    for candidate in &scored {
        expanded
            .weights
            .insert(candidate.concept.clone(), candidate.belief / max_belief);
    }
    Ok(Expansion {
        query: expanded,
        concepts: scored,
        expanded: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocchioCoefficients {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl RocchioCoefficients {
    /// `x = 1`; `y` and `z` default to the mean weight of the query's terms in
    /// the relevant and non-relevant documents.
    pub fn with_defaults(
        old: &WeightedQuery,
        relevant: &[BTreeMap<String, f64>],
        nonrelevant: &[BTreeMap<String, f64>],
        x: Option<f64>,
        y: Option<f64>,
        z: Option<f64>,
    ) -> Self {
        RocchioCoefficients {
            x: x.unwrap_or(1.0),
            y: y.unwrap_or_else(|| mean_query_weight(old, relevant)),
            z: z.unwrap_or_else(|| mean_query_weight(old, nonrelevant)),
        }
    }
}

fn mean_query_weight(query: &WeightedQuery, docs: &[BTreeMap<String, f64>]) -> f64 {
    let cells = docs.len() * query.weights.len();
    if cells == 0 {
        return 0.0;
    }
    let mut values: Vec<f64> = docs
        .iter()
        .flat_map(|d| query.weights.keys().map(move |t| d.get(t).copied().unwrap_or(0.0)))
        .collect();
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / cells as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscardedTerm {
    pub term: String,
    pub old_weight: Option<f64>,
    pub new_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    /// Terms whose new weight stayed positive.
    pub query: WeightedQuery,
    /// Terms removed because their new weight was ≤ 0.
    pub discarded: Vec<DiscardedTerm>,
}

/// `w' = x·w + y·mean_{RD}(w_t) − z·mean_{NRD}(w_t)` for every term of the old
/// query or of a relevant document; non-positive results are discarded.
pub fn rocchio_refine(
    old: &WeightedQuery,
    relevant: &[BTreeMap<String, f64>],
    nonrelevant: &[BTreeMap<String, f64>],
    coefficients: RocchioCoefficients,
) -> Result<Refinement> {
    let RocchioCoefficients { x, y, z } = coefficients;
    if [x, y, z].iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(Error::InvalidArgument(format!("coefficients must be non-negative: x={x} y={y} z={z}")));
    }
    let terms: BTreeSet<&String> = old
        .weights
        .keys()
        .chain(relevant.iter().flat_map(BTreeMap::keys))
        .collect();
    let mut weights = BTreeMap::new();
    let mut discarded = Vec::new();
    for term in terms {
        let old_weight = old.weights.get(term).copied();
        let new_weight = x * old_weight.unwrap_or(0.0) + y * mean_weight(term, relevant) - z * mean_weight(term, nonrelevant);
        if new_weight > 0.0 {
            weights.insert(term.clone(), new_weight);
        } else {
            discarded.push(DiscardedTerm {
                term: term.clone(),
                old_weight,
                new_weight,
            });
        }
    }
    Ok(Refinement {
        query: WeightedQuery {
            weights,
            origin: Origin::Refined,
        },
        discarded,
    })
}

/// Mean weight of `term` over `docs`, summed in sorted order so the result
/// does not depend on document order. Zero for an empty set.
fn mean_weight(term: &str, docs: &[BTreeMap<String, f64>]) -> f64 {
    if docs.is_empty() {
        return 0.0;
    }
    let mut values: Vec<f64> = docs.iter().filter_map(|d| d.get(term).copied()).collect();
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / docs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(pairs: &[(&str, u32)]) -> BTreeMap<String, u32> {
        pairs.iter().map(|(t, n)| (t.to_string(), *n)).collect()
    }

    fn wdoc(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(t, w)| (t.to_string(), *w)).collect()
    }

    fn query(pairs: &[(&str, f64)]) -> WeightedQuery {
        WeightedQuery::new(wdoc(pairs), Origin::User).unwrap()
    }

    #[test]
    fn af_examples() {
        let docs = [doc(&[("t", 2), ("c", 3)]), doc(&[("t", 1)])];
        assert_eq!(cooccurrence_af("c", "t", &docs), 6.0);
        assert_eq!(cooccurrence_af("x", "t", &docs), 0.0);
        let docs = [doc(&[("c", 3)]), doc(&[("c", 1)])];
        assert_eq!(cooccurrence_af("c", "t", &docs), 0.0);
    }

    #[test]
    fn belief_examples() {
        let empty = vec![BTreeMap::new(); 2];
        let terms = vec![("t".to_string(), 2.0), ("u".to_string(), 0.5)];
        let b = lca_belief(&terms, "c", 1.0, &empty, 0.1).unwrap();
        assert!((b - 0.1f64.powf(2.0) * 0.1f64.powf(0.5)).abs() < 1e-15);

        let mut docs = vec![BTreeMap::new(); 10];
        docs[0] = doc(&[("t", 5), ("c", 1)]);
        let b = lca_belief(&[("t".to_string(), 1.0)], "c", 1.0, &docs, 0.1).unwrap();
        assert!((b - 0.798970004336019).abs() < 1e-12);

        assert!(matches!(
            lca_belief(&terms, "c", 1.0, &empty[..1], 0.1),
            Err(Error::InsufficientTopDocuments)
        ));
    }

    #[test]
    fn product_law() {
        // af = 4 for both terms over 4 documents, so each factor is 0.1 + idf_c = 0.5.
        let mut docs = vec![BTreeMap::new(); 4];
        docs[0] = doc(&[("t", 2), ("u", 2), ("c", 2)]);
        let idf_c = 0.4;
        let terms = vec![("t".to_string(), 1.0), ("u".to_string(), 1.0)];
        let b = lca_belief(&terms, "c", idf_c, &docs, 0.1).unwrap();
        assert!((b - 0.25).abs() < 1e-12);
    }

    #[test]
    fn worked_refinement_discards() {
        let old = query(&[("a", 4.0 / 3.0)]);
        let rd = vec![wdoc(&[("a", 1.0)]); 10];
        let nrd = vec![wdoc(&[("a", 1.0)]); 15];
        let r = rocchio_refine(&old, &rd, &nrd, RocchioCoefficients { x: 1.0, y: 5.0, z: 7.5 }).unwrap();
        assert!(r.query.is_empty());
        assert_eq!(r.discarded.len(), 1);
        assert!((r.discarded[0].new_weight + 7.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.discarded[0].old_weight, Some(4.0 / 3.0));
    }

    #[test]
    fn positive_feedback_only() {
        let old = query(&[("a", 0.5)]);
        let rd = vec![wdoc(&[("a", 1.0), ("b", 0.5)]), wdoc(&[("a", 0.0)])];
        let r = rocchio_refine(&old, &rd, &[], RocchioCoefficients { x: 1.0, y: 2.0, z: 99.0 }).unwrap();
        assert_eq!(r.query.weights["a"], 0.5 + 2.0 * 0.5);
        assert_eq!(r.query.weights["b"], 2.0 * 0.25);
        assert_eq!(r.query.origin, Origin::Refined);
    }

    #[test]
    fn identity_coefficients() {
        let old = query(&[("a", 0.5), ("b", 1.0)]);
        let rd = vec![wdoc(&[("c", 1.0)])];
        let r = rocchio_refine(&old, &rd, &rd, RocchioCoefficients { x: 1.0, y: 0.0, z: 0.0 }).unwrap();
        assert_eq!(r.query.weights, old.weights);
        assert_eq!(r.discarded.len(), 1);
    }

    #[test]
    fn default_coefficients_average_judged_weights() {
        let old = query(&[("a", 1.0)]);
        let rd = vec![wdoc(&[("a", 4.0)]), wdoc(&[("a", 6.0)])];
        let nrd = vec![wdoc(&[("a", 5.0)]), wdoc(&[("a", 10.0)])];
        let c = RocchioCoefficients::with_defaults(&old, &rd, &nrd, None, None, None);
        assert_eq!((c.x, c.y, c.z), (1.0, 5.0, 7.5));
        let c = RocchioCoefficients::with_defaults(&old, &[], &[], Some(2.0), None, Some(1.0));
        assert_eq!((c.x, c.y, c.z), (2.0, 0.0, 1.0));
    }

    #[test]
    fn rejects_negative_coefficients() {
        let old = query(&[("a", 1.0)]);
        assert!(rocchio_refine(&old, &[], &[], RocchioCoefficients { x: -1.0, y: 0.0, z: 0.0 }).is_err());
        assert!(WeightedQuery::new(wdoc(&[("a", 0.0)]), Origin::User).is_err());
    }

    fn weight_docs() -> impl Strategy<Value = Vec<BTreeMap<String, f64>>> {
        proptest::collection::vec(
            proptest::collection::btree_map("[a-d]", 0.0f64..1.0, 0..4),
            0..5,
        )
    }

    proptest! {
        #[test]
        fn refined_weights_positive(rd in weight_docs(), nrd in weight_docs(), x in 0.0f64..2.0, y in 0.0f64..2.0, z in 0.0f64..2.0) {
            let old = query(&[("a", 0.7), ("b", 0.2)]);
            let r = rocchio_refine(&old, &rd, &nrd, RocchioCoefficients { x, y, z }).unwrap();
            prop_assert!(r.query.weights.values().all(|w| *w > 0.0));
        }

        #[test]
        fn permutation_invariant(rd in weight_docs(), nrd in weight_docs(), seed in any::<u64>()) {
            let old = query(&[("a", 0.7)]);
            let c = RocchioCoefficients { x: 1.0, y: 0.8, z: 0.3 };
            let mut rd2 = rd.clone();
            let mut nrd2 = nrd.clone();
            let len = rd2.len().max(1);
            rd2.rotate_left(seed as usize % len);
            nrd2.reverse();
            prop_assert_eq!(
                rocchio_refine(&old, &rd, &nrd, c).unwrap(),
                rocchio_refine(&old, &rd2, &nrd2, c).unwrap()
            );
        }

        #[test]
        fn belief_monotone_in_af(extra in 0u32..20, base in 0u32..20) {
            let mk = |n: u32| vec![doc(&[("t", 1), ("c", n)]), BTreeMap::new(), BTreeMap::new()];
            let terms = [("t".to_string(), 1.3)];
            let low = lca_belief(&terms, "c", 0.7, &mk(base), 0.1).unwrap();
            let high = lca_belief(&terms, "c", 0.7, &mk(base + extra), 0.1).unwrap();
            prop_assert!(high >= low);
        }
    }
}
