//! Concept graph extraction and OWL (RDF/XML) export.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::inference_net::{InferenceGraph, NodeKind};
use crate::{Error, Result};

const CONCEPT_IRI: &str = "urn:mir:concept:";
const PROPERTY_IRI: &str = "urn:mir:property:";
const RELATIONSHIP_IRI: &str = "urn:mir:relationship:";
const RESULT_IRI: &str = "urn:mir:result";
const RESULT_PROPERTY_IRI: &str = "urn:mir:result-property";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConceptGraph {
    vertices: BTreeMap<String, String>,
    edges: BTreeSet<(String, String)>,
}

impl ConceptGraph {
    /// Vertices are `(label, value)`; edges reference labels.
    pub fn new(vertices: Vec<(String, String)>, edges: Vec<(String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (label, value) in vertices {
            if map.insert(label.clone(), value).is_some() {
                return Err(Error::InvalidGraph(format!("duplicate concept {label:?}")));
            }
        }
        for (from, to) in &edges {
            if !map.contains_key(from) || !map.contains_key(to) {
                return Err(Error::InvalidGraph(format!("edge {from:?} -> {to:?} has a missing endpoint")));
            }
        }
        Ok(ConceptGraph {
            vertices: map,
            edges: edges.into_iter().collect(),
        })
    }

    pub fn vertices(&self) -> impl Iterator<Item = (&str, &str)> {
        self.vertices.iter().map(|(l, v)| (l.as_str(), v.as_str()))
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices without outgoing edges.
    pub fn leaves(&self) -> Vec<&str> {
        let sources: BTreeSet<&str> = self.edges.iter().map(|(a, _)| a.as_str()).collect();
        self.vertices
            .keys()
            .map(String::as_str)
            .filter(|l| !sources.contains(l))
            .collect()
    }
}

/// One vertex per ConceptRep node, valued by its summed incoming evidence;
/// an edge joins every pair of concepts that share a document, directed from
/// the smaller label to the larger.
pub fn concept_graph_from_inference(graph: &InferenceGraph) -> ConceptGraph {
    let mut vertices = BTreeMap::new();
    for node in graph.nodes() {
        if let Some(label) = node.concept_label() {
            let evidence: f64 = graph.parents(&node.id).iter().map(|(_, w)| w).sum();
            vertices.insert(label.to_string(), evidence.to_string());
        }
    }
    let children = graph.children();
    let mut edges = BTreeSet::new();
    for doc in graph.nodes().filter(|n| n.kind == NodeKind::Document) {
        let concepts: BTreeSet<&str> = children
            .get(doc.id.as_str())
            .into_iter()
            .flatten()
            .flat_map(|text| children.get(text).into_iter().flatten())
            .filter_map(|id| graph.node(id).and_then(|n| n.concept_label()))
            .collect();
        let concepts: Vec<&str> = concepts.into_iter().collect();
        for (i, a) in concepts.iter().enumerate() {
            for b in &concepts[i + 1..] {
                edges.insert((a.to_string(), b.to_string()));
            }
        }
    }
    ConceptGraph { vertices, edges }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwlDocument {
    pub text: String,
    pub class_count: usize,
}

/// Lowercase, non-alphanumeric runs become a single hyphen, no leading or
/// trailing hyphen.
pub fn slug(label: &str) -> String {
    let mut out = String::new();
    for c in label.chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    while out.ends_with('-') {
        out.pop();
    }
    out
}

/// Slugs per label; labels whose slugs collide get `-2`, `-3`, ... in label order.
fn unique_slugs(cg: &ConceptGraph) -> Result<BTreeMap<&str, String>> {
    let mut taken: BTreeSet<String> = BTreeSet::new();
    let mut slugs = BTreeMap::new();
    for label in cg.vertices.keys() {
        let base = slug(label);
        if base.is_empty() {
            return Err(Error::EmptySlug(label.clone()));
        }
        let mut candidate = base.clone();
        let mut n = 2;
        while !taken.insert(candidate.clone()) {
            candidate = format!("{base}-{n}");
            n += 1;
        }
        slugs.insert(label.as_str(), candidate);
    }
    Ok(slugs)
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Serializes the concept graph as RDF/XML: a class and a datatype property
/// per concept, a `Relationship` class per edge whose label concatenates the
/// two concept labels, and a `Result` class with its property when any leaf
/// concept exists.
pub fn export_owl(cg: &ConceptGraph) -> Result<OwlDocument> {
    let slugs = unique_slugs(cg)?;
    let relationship_iri = |from: &str, to: &str| format!("{RELATIONSHIP_IRI}{}--{}", slugs[from], slugs[to]);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<rdf:RDF xmlns:rdf=\"http://www.w3.org/1999/02/22-rdf-syntax-ns#\" \
         xmlns:rdfs=\"http://www.w3.org/2000/01/rdf-schema#\" \
         xmlns:owl=\"http://www.w3.org/2002/07/owl#\">\n",
    );
    out.push_str("  <owl:Ontology rdf:about=\"urn:mir:ontology\"/>\n");
    let mut class_count = 0;

    let mut outgoing: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (from, to) in cg.edges() {
        outgoing.entry(from).or_default().push(to);
    }

    for (label, value) in cg.vertices() {
        let slug = &slugs[label];
        let escaped = escape(label);
        writeln!(out, "  <owl:Class rdf:about=\"{CONCEPT_IRI}{slug}\">").unwrap();
        writeln!(out, "    <rdfs:label>{escaped}</rdfs:label>").unwrap();
        out.push_str("  </owl:Class>\n");
        class_count += 1;

        writeln!(out, "  <owl:DatatypeProperty rdf:about=\"{PROPERTY_IRI}{slug}\">").unwrap();
        writeln!(out, "    <rdfs:label>{escaped}</rdfs:label>").unwrap();
        writeln!(out, "    <rdfs:comment>{}</rdfs:comment>", escape(value)).unwrap();
        writeln!(out, "    <rdfs:domain rdf:resource=\"{CONCEPT_IRI}{slug}\"/>").unwrap();
        for target in outgoing.get(label).into_iter().flatten() {
            writeln!(out, "    <rdfs:domain rdf:resource=\"{CONCEPT_IRI}{}\"/>", slugs[target]).unwrap();
        }
        out.push_str("  </owl:DatatypeProperty>\n");
    }

    let leaves = cg.leaves();
    if !leaves.is_empty() {
        writeln!(out, "  <owl:Class rdf:about=\"{RESULT_IRI}\">").unwrap();
        out.push_str("    <rdfs:label>Result</rdfs:label>\n");
        out.push_str("  </owl:Class>\n");
        class_count += 1;

        writeln!(out, "  <owl:DatatypeProperty rdf:about=\"{RESULT_PROPERTY_IRI}\">").unwrap();
        out.push_str("    <rdfs:label>Result</rdfs:label>\n");
        for leaf in &leaves {
            let value = &cg.vertices[*leaf];
            writeln!(out, "    <rdfs:comment>{}: {}</rdfs:comment>", escape(leaf), escape(value)).unwrap();
        }
        writeln!(out, "    <rdfs:domain rdf:resource=\"{RESULT_IRI}\"/>").unwrap();
        for (from, to) in cg.edges() {
            writeln!(out, "    <rdfs:domain rdf:resource=\"{}\"/>", relationship_iri(from, to)).unwrap();
        }
        out.push_str("  </owl:DatatypeProperty>\n");
    }

    for (from, to) in cg.edges() {
        writeln!(out, "  <owl:Class rdf:about=\"{}\">", relationship_iri(from, to)).unwrap();
        writeln!(out, "    <rdfs:label>{}{}</rdfs:label>", escape(from), escape(to)).unwrap();
        out.push_str("  </owl:Class>\n");
        class_count += 1;
    }

    out.push_str("</rdf:RDF>\n");
    Ok(OwlDocument {
        text: out,
        class_count,
    })
}
