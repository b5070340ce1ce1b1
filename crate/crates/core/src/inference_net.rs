//! Document and query networks combined into an inference graph, evaluated
//! with weighted-sum link matrices.
//!
//! A node with parents `1..n` takes the value
//! `Σ_S Π_{i∈S} p_i Π_{i∉S} (1−p_i) · Σ_{i∈S} w_i / Σ w_i` over all `2^n`
//! parent truth assignments `S`. Because the column weight is linear in each
//! parent indicator this collapses to `Σ w_i p_i / Σ w_i`, which is what
//! graph evaluation uses; [`eval_link_matrix_enum`] keeps the full expansion.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Field};
use crate::index::InvertedIndex;
use crate::{Error, RankedList, Result};

/// Largest parent count [`eval_link_matrix_enum`] accepts.
pub const MAX_ENUM_PARENTS: usize = 20;

/// Floor applied to term evidence edges, as a multiple of tf, so that terms
/// present in every document (idf = 0) keep a strictly positive weight.
const MIN_EVIDENCE_PER_TF: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Document,
    Text,
    ConceptRep,
    Query,
    Result,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetNode {
    pub id: String,
    pub kind: NodeKind,
    pub prior: Option<f64>,
}

impl NetNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        NetNode {
            id: id.into(),
            kind,
            prior: None,
        }
    }

    pub fn document(doc_id: &str, prior: f64) -> Self {
        NetNode {
            id: document_node_id(doc_id),
            kind: NodeKind::Document,
            prior: Some(prior),
        }
    }

    pub fn text(doc_id: &str, field: Field) -> Self {
        NetNode::new(format!("text:{doc_id}:{}", field.as_str()), NodeKind::Text)
    }

    pub fn concept(label: &str) -> Self {
        NetNode::new(concept_node_id(label), NodeKind::ConceptRep)
    }

    pub fn query(term: &str) -> Self {
        NetNode::new(format!("query:{term}"), NodeKind::Query)
    }

    pub fn result() -> Self {
        NetNode::new(RESULT_NODE_ID, NodeKind::Result)
    }

    /// The concept label of a ConceptRep node.
    pub fn concept_label(&self) -> Option<&str> {
        match self.kind {
            NodeKind::ConceptRep => self.id.strip_prefix("concept:").or(Some(&self.id)),
            _ => None,
        }
    }

    /// The document id of a Document node.
    pub fn doc_id(&self) -> Option<&str> {
        match self.kind {
            NodeKind::Document => self.id.strip_prefix("doc:").or(Some(&self.id)),
            _ => None,
        }
    }
}

pub const RESULT_NODE_ID: &str = "result";

pub fn document_node_id(doc_id: &str) -> String {
    format!("doc:{doc_id}")
}

pub fn concept_node_id(label: &str) -> String {
    format!("concept:{label}")
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InferenceGraph {
    nodes: BTreeMap<String, NetNode>,
    /// child id -> (parent id, weight), parents sorted by id.
    parents: BTreeMap<String, Vec<(String, f64)>>,
}

impl InferenceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, node: NetNode) -> Result<()> {
        if let Some(prior) = node.prior {
            if !(0.0..=1.0).contains(&prior) {
                return Err(Error::InvalidGraph(format!("prior of {:?} outside [0, 1]", node.id)));
            }
        }
        if self.nodes.contains_key(&node.id) {
            return Err(Error::InvalidGraph(format!("duplicate node {:?}", node.id)));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    /// Adds `parent -> child`; a repeated edge accumulates its weight.
    pub fn add_edge(&mut self, parent: &str, child: &str, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidGraph(format!("edge {parent:?} -> {child:?} has weight {weight}")));
        }
        for end in [parent, child] {
            if !self.nodes.contains_key(end) {
                return Err(Error::InvalidGraph(format!("edge endpoint {end:?} does not exist")));
            }
        }
        let list = self.parents.entry(child.to_string()).or_default();
        match list.binary_search_by(|(p, _)| p.as_str().cmp(parent)) {
            Ok(i) => list[i].1 += weight,
            Err(i) => list.insert(i, (parent.to_string(), weight)),
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&NetNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NetNode> {
        self.nodes.values()
    }

    pub fn parents(&self, id: &str) -> &[(String, f64)] {
        self.parents.get(id).map_or(&[], Vec::as_slice)
    }

    /// Edges as `(parent, child, weight)`, sorted by parent then child.
    pub fn edges(&self) -> Vec<(&str, &str, f64)> {
        let mut edges: Vec<(&str, &str, f64)> = self
            .parents
            .iter()
            .flat_map(|(child, ps)| ps.iter().map(move |(p, w)| (p.as_str(), child.as_str(), *w)))
            .collect();
        edges.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        edges
    }

    pub fn children(&self) -> BTreeMap<&str, Vec<&str>> {
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (parent, child, _) in self.edges() {
            children.entry(parent).or_default().push(child);
        }
        children
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn document_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.values().filter_map(NetNode::doc_id)
    }

    /// Checks structural invariants and returns a topological order.
    pub fn validate(&self) -> Result<Vec<&str>> {
        for node in self.nodes.values() {
            let has_parents = !self.parents(&node.id).is_empty();
            match node.kind {
                NodeKind::Document if has_parents => {
                    return Err(Error::InvalidGraph(format!("document node {:?} has parents", node.id)));
                }
                NodeKind::Text | NodeKind::ConceptRep | NodeKind::Result if !has_parents => {
                    return Err(Error::InvalidGraph(format!("node {:?} has no parents", node.id)));
                }
                _ => {}
            }
        }
        self.topological_order()
    }

    fn topological_order(&self) -> Result<Vec<&str>> {
        let children = self.children();
        let mut indegree: BTreeMap<&str, usize> = self
            .nodes
            .keys()
            .map(|id| (id.as_str(), self.parents(id).len()))
            .collect();
        let mut ready: VecDeque<&str> = indegree
            .iter()
            .filter(|(_, d)| **d == 0)
            .map(|(id, _)| *id)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for child in children.get(id).map_or(&[][..], Vec::as_slice) {
                let d = indegree.get_mut(child).expect("child is a node");
                *d -= 1;
                if *d == 0 {
                    ready.push_back(child);
                }
            }
        }
        if order.len() == self.nodes.len() {
            Ok(order)
        } else {
            Err(Error::Cycle)
        }
    }

    fn single_result(&self) -> Result<&str> {
        let mut results = self.nodes.values().filter(|n| n.kind == NodeKind::Result);
        match (results.next(), results.next()) {
            (Some(node), None) => Ok(&node.id),
            (None, _) => Err(Error::InvalidGraph("graph has no result node".into())),
            _ => Err(Error::InvalidGraph("graph has more than one result node".into())),
        }
    }

    /// Belief of every node with the document `doc_id` instantiated to 1 and
    /// all other documents to 0.
    pub fn beliefs(&self, doc_id: &str) -> Result<BTreeMap<String, f64>> {
        let order = self.validate()?;
        let doc_node = self.document_node(doc_id)?;
        Ok(self
            .evaluate(&order, doc_node, None)
            .into_iter()
            .map(|(id, b)| (id.to_string(), b))
            .collect())
    }

    fn document_node(&self, doc_id: &str) -> Result<&str> {
        let id = document_node_id(doc_id);
        match self.nodes.get_key_value(&id) {
            Some((key, node)) if node.kind == NodeKind::Document => Ok(key),
            _ => Err(Error::UnknownDocument(doc_id.to_string())),
        }
    }

    /// Evaluates nodes in `order`. When `reachable` is given, nodes outside it
    /// are known to be 0 and skipped.
    fn evaluate<'a>(
        &'a self,
        order: &[&'a str],
        instantiated: &str,
        reachable: Option<&BTreeSet<&str>>,
    ) -> BTreeMap<&'a str, f64> {
        let mut belief: BTreeMap<&str, f64> = BTreeMap::new();
        for &id in order {
            if reachable.is_some_and(|r| !r.contains(id)) {
                continue;
            }
            let value = match self.nodes[id].kind {
                NodeKind::Document => f64::from(u8::from(id == instantiated)),
                _ => {
                    let parents = self.parents(id);
                    if parents.is_empty() {
                        0.0
                    } else {
                        let (num, den) = parents.iter().fold((0.0, 0.0), |(num, den), (p, w)| {
                            (num + w * belief.get(p.as_str()).copied().unwrap_or(0.0), den + w)
                        });
                        (num / den).clamp(0.0, 1.0)
                    }
                }
            };
            belief.insert(id, value);
        }
        belief
    }

    fn descendants<'a>(&'a self, start: &'a str, children: &BTreeMap<&'a str, Vec<&'a str>>) -> BTreeSet<&'a str> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            for &child in children.get(id).map_or(&[][..], Vec::as_slice) {
                if seen.insert(child) {
                    stack.push(child);
                }
            }
        }
        seen
    }

    /// Serializes the graph for debugging and for the ontology exporter.
    pub fn to_json(&self) -> String {
        let dump = GraphDump {
            nodes: self.nodes.values().cloned().collect(),
            edges: self
                .edges()
                .into_iter()
                .map(|(p, c, w)| (p.to_string(), c.to_string(), w))
                .collect(),
        };
        serde_json::to_string(&dump).expect("graph serialization is infallible")
    }

    pub fn from_json(input: &str) -> Result<Self> {
        let dump: GraphDump = serde_json::from_str(input).map_err(|e| Error::json(input, &e))?;
        let mut graph = InferenceGraph::new();
        for node in dump.nodes {
            graph.add_node(node)?;
        }
        for (p, c, w) in dump.edges {
            graph.add_edge(&p, &c, w)?;
        }
        Ok(graph)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDump {
    nodes: Vec<NetNode>,
    edges: Vec<(String, String, f64)>,
}

/// Document network: Document -> Text (one per non-empty field) -> ConceptRep.
///
/// Documents that declare concepts link every Text node to those concepts with
/// weight 1; all others link each Text node to one ConceptRep per indexed term
/// with weight tf·idf.
pub fn build_document_network(corpus: &Corpus, index: &InvertedIndex) -> Result<InferenceGraph> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let prior = 1.0 / corpus.len() as f64;
    let mut graph = InferenceGraph::new();
    for (doc, terms) in corpus.iter() {
        let doc_node = NetNode::document(&doc.id, prior);
        let doc_node_id = doc_node.id.clone();
        graph.add_node(doc_node)?;

        let mut fields: Vec<Field> = terms.fields.keys().copied().collect();
        if fields.is_empty() && !doc.concepts.is_empty() {
            fields.push(Field::Body);
        }
        for field in fields {
            let text = NetNode::text(&doc.id, field);
            let text_id = text.id.clone();
            graph.add_node(text)?;
            graph.add_edge(&doc_node_id, &text_id, 1.0)?;

            if doc.concepts.is_empty() {
                for (term, &tf) in terms.fields.get(&field).into_iter().flatten() {
                    let Ok(idf) = index.idf(term) else { continue };
                    let tf = f64::from(tf);
                    let weight = (tf * idf).max(tf * MIN_EVIDENCE_PER_TF);
                    link_concept(&mut graph, &text_id, term, weight)?;
                }
            } else {
                for concept in &doc.concepts {
                    link_concept(&mut graph, &text_id, concept, 1.0)?;
                }
            }
        }
    }
    Ok(graph)
}

fn link_concept(graph: &mut InferenceGraph, text_id: &str, label: &str, weight: f64) -> Result<()> {
    let id = concept_node_id(label);
    if graph.node(&id).is_none() {
        graph.add_node(NetNode::concept(label))?;
    }
    graph.add_edge(text_id, &id, weight)
}

/// Adds one Query node per distinct term (duplicate weights summed), linked
/// from the ConceptRep nodes whose lowercased label equals the term, and a
/// single Result node fed by every Query node.
pub fn attach_query_network(mut graph: InferenceGraph, query_terms: &[(String, f64)]) -> Result<InferenceGraph> {
    if query_terms.is_empty() {
        return Err(Error::InvalidArgument("at least one query term is required".into()));
    }
    if graph.nodes().any(|n| matches!(n.kind, NodeKind::Query | NodeKind::Result)) {
        return Err(Error::InvalidGraph("query network already attached".into()));
    }
    let mut merged: BTreeMap<&str, f64> = BTreeMap::new();
    for (term, weight) in query_terms {
        if !(*weight > 0.0 && weight.is_finite()) {
            return Err(Error::InvalidArgument(format!("query term {term:?} has weight {weight}")));
        }
        *merged.entry(term.as_str()).or_insert(0.0) += weight;
    }
    let mut concepts_by_key: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for node in graph.nodes() {
        if let Some(label) = node.concept_label() {
            concepts_by_key.entry(label.to_lowercase()).or_default().push(node.id.clone());
        }
    }
    graph.add_node(NetNode::result())?;
    for (term, weight) in merged {
        let query = NetNode::query(term);
        let query_id = query.id.clone();
        graph.add_node(query)?;
        for concept_id in concepts_by_key.get(term).into_iter().flatten() {
            graph.add_edge(concept_id, &query_id, weight)?;
        }
        graph.add_edge(&query_id, RESULT_NODE_ID, weight)?;
    }
    Ok(graph)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    parent_probs: Vec<f64>,
    parent_weights: Vec<f64>,
}

impl LinkMatrix {
    pub fn new(parent_probs: Vec<f64>, parent_weights: Vec<f64>) -> Result<Self> {
        if parent_probs.len() != parent_weights.len() || parent_probs.is_empty() {
            return Err(Error::LengthMismatch {
                docs: parent_probs.len(),
                query: parent_weights.len(),
            });
        }
        if parent_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument("parent probabilities must lie in [0, 1]".into()));
        }
        if parent_weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("parent weights must be positive".into()));
        }
        Ok(LinkMatrix {
            parent_probs,
            parent_weights,
        })
    }

    pub fn parents(&self) -> usize {
        self.parent_probs.len()
    }

    /// Number of columns, one per parent truth assignment.
    pub fn columns(&self) -> u64 {
        1u64 << self.parents().min(63)
    }
}

/// Sums every column of the link matrix explicitly.
pub fn eval_link_matrix_enum(lm: &LinkMatrix) -> Result<f64> {
    let n = lm.parents();
    if n > MAX_ENUM_PARENTS {
        return Err(Error::TooManyParents(n));
    }
    let total_weight: f64 = lm.parent_weights.iter().sum();
    let mut belief = 0.0;
    for column in 0u32..(1 << n) {
        let mut prob = 1.0;
        let mut true_weight = 0.0;
        for (i, (&p, &w)) in lm.parent_probs.iter().zip(&lm.parent_weights).enumerate() {
            if column & (1 << i) != 0 {
                prob *= p;
                true_weight += w;
            } else {
                prob *= 1.0 - p;
            }
        }
        belief += prob * true_weight / total_weight;
    }
    Ok(belief)
}

/// `Σ w_i p_i / Σ w_i`.
pub fn eval_link_matrix_closed(lm: &LinkMatrix) -> f64 {
    let (num, den) = lm
        .parent_probs
        .iter()
        .zip(&lm.parent_weights)
        .fold((0.0, 0.0), |(num, den), (p, w)| (num + w * p, den + w));
    num / den
}

/// Belief of the Result node when `doc_id` is the instantiated document.
pub fn score_inference(graph: &InferenceGraph, doc_id: &str) -> Result<f64> {
    let order = graph.validate()?;
    let result = graph.single_result()?;
    let doc_node = graph.document_node(doc_id)?;
    let belief = graph.evaluate(&order, doc_node, None);
    Ok(belief[result])
}

/// Top `k` documents by [`score_inference`], evaluating only each document's
/// descendants (every other node has belief 0).
pub fn rank_inference(graph: &InferenceGraph, k: usize) -> Result<RankedList> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let order = graph.validate()?;
    let result = graph.single_result()?;
    let children = graph.children();
    let docs: Vec<&NetNode> = graph.nodes().filter(|n| n.kind == NodeKind::Document).collect();
    let scored: Vec<(String, f64)> = docs
        .par_iter()
        .filter_map(|node| {
            let reachable = graph.descendants(&node.id, &children);
            if !reachable.contains(result) {
                return None;
            }
            let belief = graph.evaluate(&order, &node.id, Some(&reachable));
            Some((node.doc_id()?.to_string(), belief[result]))
        })
        .collect();
    Ok(RankedList::top_k(scored, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, TokenizerConfig};
    use crate::index::build_index;
    use proptest::prelude::*;

    fn network(docs: Vec<Document>) -> InferenceGraph {
        let corpus = Corpus::from_documents(docs, &TokenizerConfig::default()).unwrap();
        build_document_network(&corpus, &build_index(&corpus)).unwrap()
    }

    #[test]
    fn single_doc_chain() {
        let graph = network(vec![Document::new("d1", "cat")]);
        let ids: Vec<&str> = graph.nodes().map(|n| n.id.as_str()).collect();
        assert_eq!(ids, vec!["concept:cat", "doc:d1", "text:d1:body"]);
        assert_eq!(graph.edges().len(), 2);
        let graph = attach_query_network(graph, &[("cat".into(), 1.0)]).unwrap();
        assert_eq!(score_inference(&graph, "d1").unwrap(), 1.0);
    }

    #[test]
    fn shared_concept_has_two_parents() {
        let mut a = Document::new("d1", "one");
        a.concepts.insert("animal".into());
        let mut b = Document::new("d2", "two");
        b.concepts.insert("animal".into());
        let graph = network(vec![a, b]);
        assert_eq!(graph.parents("concept:animal").len(), 2);
    }

    #[test]
    fn empty_corpus_rejected() {
        let corpus = Corpus::default();
        assert!(matches!(
            build_document_network(&corpus, &build_index(&corpus)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn query_network_shape() {
        let graph = network(vec![Document::new("d1", "cat"), Document::new("d2", "dog")]);
        let terms = [("cat".to_string(), 0.5), ("emu".to_string(), 1.0), ("cat".to_string(), 0.25)];
        let graph = attach_query_network(graph, &terms).unwrap();
        assert_eq!(graph.parents(RESULT_NODE_ID).len(), 2);
        assert_eq!(graph.parents("query:cat"), &[("concept:cat".to_string(), 0.75)]);
        assert!(graph.parents("query:emu").is_empty());
        assert_eq!(graph.beliefs("d1").unwrap()["query:emu"], 0.0);
    }

    #[test]
    fn matched_doc_outscores_unmatched() {
        let graph = network(vec![Document::new("d1", "cat dog"), Document::new("d2", "dog")]);
        let graph = attach_query_network(graph, &[("cat".into(), 1.0)]).unwrap();
        let s1 = score_inference(&graph, "d1").unwrap();
        let s2 = score_inference(&graph, "d2").unwrap();
        assert_eq!(s2, 0.0);
        assert!(s1 > s2);
        let ranked = rank_inference(&graph, 5).unwrap();
        assert_eq!(ranked.doc_ids(), vec!["d1"]);
    }

    #[test]
    fn no_intersection_ranks_nothing() {
        let graph = network(vec![Document::new("d1", "cat")]);
        let graph = attach_query_network(graph, &[("emu".into(), 1.0)]).unwrap();
        assert!(rank_inference(&graph, 3).unwrap().is_empty());
    }

    #[test]
    fn ties_ordered_by_id() {
        let graph = network(vec![Document::new("b", "cat"), Document::new("a", "cat"), Document::new("c", "dog")]);
        let graph = attach_query_network(graph, &[("cat".into(), 1.0)]).unwrap();
        assert_eq!(rank_inference(&graph, 3).unwrap().doc_ids(), vec!["a", "b"]);
    }

    #[test]
    fn cycle_rejected() {
        let mut g = InferenceGraph::new();
        g.add_node(NetNode::new("a", NodeKind::Text)).unwrap();
        g.add_node(NetNode::new("b", NodeKind::Text)).unwrap();
        g.add_edge("a", "b", 1.0).unwrap();
        g.add_edge("b", "a", 1.0).unwrap();
        assert!(matches!(g.validate(), Err(Error::Cycle)));
    }

    #[test]
    fn edge_validation() {
        let mut g = InferenceGraph::new();
        g.add_node(NetNode::new("a", NodeKind::Text)).unwrap();
        assert!(g.add_edge("a", "missing", 1.0).is_err());
        assert!(g.add_edge("a", "a", 0.0).is_err());
        assert!(g.add_node(NetNode::new("a", NodeKind::Text)).is_err());
    }

    #[test]
    fn link_matrix_examples() {
        let lm = LinkMatrix::new(vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(lm.columns(), 8);
        assert!((eval_link_matrix_enum(&lm).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((eval_link_matrix_closed(&lm) - 2.0 / 3.0).abs() < 1e-15);
        let all_true = LinkMatrix::new(vec![1.0; 4], vec![0.5, 2.0, 1.0, 3.0]).unwrap();
        assert!((eval_link_matrix_enum(&all_true).unwrap() - 1.0).abs() < 1e-15);
        let single = LinkMatrix::new(vec![0.5], vec![3.0]).unwrap();
        assert_eq!(eval_link_matrix_enum(&single).unwrap(), 0.5);
        let pair = LinkMatrix::new(vec![0.2, 0.8], vec![1.0, 1.0]).unwrap();
        assert!((eval_link_matrix_closed(&pair) - 0.5).abs() < 1e-15);
        let wide = LinkMatrix::new(vec![0.5; 21], vec![1.0; 21]).unwrap();
        assert!(matches!(eval_link_matrix_enum(&wide), Err(Error::TooManyParents(21))));
        assert!(LinkMatrix::new(vec![0.5], vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let graph = network(vec![Document::new("d1", "cat dog"), Document::new("d2", "dog")]);
        let graph = attach_query_network(graph, &[("cat".into(), 1.0)]).unwrap();
        let text = graph.to_json();
        assert!(text.starts_with("{\"nodes\":[{\"id\":\"concept:cat\",\"kind\":\"concept_rep\",\"prior\":null}"));
        assert_eq!(InferenceGraph::from_json(&text).unwrap(), graph);
    }

    proptest! {
        #[test]
        fn closed_form_matches_enumeration(
            (probs, weights) in (1usize..=10).prop_flat_map(|n| (
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(0.01f64..10.0, n),
            ))
        ) {
            let lm = LinkMatrix::new(probs, weights).unwrap();
            prop_assert!((eval_link_matrix_closed(&lm) - eval_link_matrix_enum(&lm).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn weight_scale_invariance(
            (probs, weights) in (1usize..=6).prop_flat_map(|n| (
                proptest::collection::vec(0.0f64..=1.0, n),
                proptest::collection::vec(0.01f64..10.0, n),
            )),
            c in 0.01f64..100.0,
        ) {
            let scaled: Vec<f64> = weights.iter().map(|w| w * c).collect();
            let a = eval_link_matrix_closed(&LinkMatrix::new(probs.clone(), weights).unwrap());
            let b = eval_link_matrix_closed(&LinkMatrix::new(probs, scaled).unwrap());
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
