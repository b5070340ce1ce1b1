use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::PathBuf;

use mirstat::bim::{query_term_weights, rank_bim, RelevanceJudgments, Smoothing};
use mirstat::corpus::{ingest_corpus, tokenize, Corpus, Document, Field, MediaType, TokenizerConfig};
use mirstat::expansion::{expand_lca, lca_belief, LcaParams, Origin, WeightedQuery};
use mirstat::index::{build_index, load_index, save_index};
use mirstat::inference_net::{eval_link_matrix_enum, InferenceGraph, LinkMatrix, NetNode, NodeKind};
use mirstat::ontology::{export_owl, ConceptGraph};
use mirstat::pnorm::{parse_query, rank_pnorm, score_pnorm};
use mirstat::Error;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus")
}

fn fixture_corpus() -> Corpus {
    let ingested = ingest_corpus(fixture_dir(), &TokenizerConfig::default()).unwrap();
    assert!(ingested.errors.is_empty(), "{:?}", ingested.errors);
    ingested.corpus
}

/// Term counts of every document, recomputed straight from the tokenizer.
fn brute_counts(corpus: &Corpus, config: &TokenizerConfig) -> BTreeMap<String, BTreeMap<String, u32>> {
    corpus
        .documents()
        .iter()
        .map(|doc| {
            let mut counts = BTreeMap::new();
            for field in Field::ALL {
                for t in tokenize(doc.field(field), config) {
                    *counts.entry(t).or_insert(0) += 1;
                }
            }
            (doc.id.clone(), counts)
        })
        .collect()
}

#[test]
fn fixture_ingestion() {
    let corpus = fixture_corpus();
    assert_eq!(corpus.len(), 8);
    let d07 = corpus.document("d07").unwrap();
    assert_eq!(d07.media_type, MediaType::Image);
    assert_eq!(d07.title, "Tabby on a fence");
    assert_eq!(d07.concepts, BTreeSet::from(["animal".to_string(), "cat".to_string()]));
    assert_eq!(corpus.document("d08").unwrap().media_type, MediaType::Audio);
    assert_eq!(corpus.document("d01").unwrap().media_type, MediaType::Text);
}

#[test]
fn empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let ingested = ingest_corpus(dir.path(), &TokenizerConfig::default()).unwrap();
    assert!(ingested.corpus.is_empty());
    assert!(ingested.errors.is_empty());
}

#[test]
fn unreadable_file_is_collected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("good.txt"), "cat cat dog").unwrap();
    fs::write(dir.path().join("bad.txt"), [0xff, 0xfe, 0x00]).unwrap();
    let ingested = ingest_corpus(dir.path(), &TokenizerConfig::default()).unwrap();
    assert_eq!(ingested.corpus.len(), 1);
    assert_eq!(ingested.errors.len(), 1);
    assert!(ingested.errors[0].to_string().contains("bad.txt"));
    let stats = &ingested.corpus.term_stats()["cat"];
    assert_eq!((stats.df, stats.total_tf), (1, 2));
}

#[test]
fn malformed_sidecar_names_file_and_key() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("d1.txt"), "cat").unwrap();
    fs::write(dir.path().join("d1.meta.json"), r#"{"title":"x","colour":"red"}"#).unwrap();
    let err = ingest_corpus(dir.path(), &TokenizerConfig::default()).unwrap_err();
    let message = err.to_string();
    assert!(matches!(err, Error::Sidecar { .. }));
    assert!(message.contains("d1.meta.json") && message.contains("colour"), "{message}");
}

#[test]
fn idf_and_weights_match_brute_force() {
    let corpus = fixture_corpus();
    let index = build_index(&corpus);
    let counts = brute_counts(&corpus, &TokenizerConfig::default());
    let n = counts.len() as f64;

    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for terms in counts.values() {
        for t in terms.keys() {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    assert_eq!(index.terms().collect::<Vec<_>>(), df.keys().copied().collect::<Vec<_>>());
    for (t, &d) in &df {
        assert_eq!(index.df(t), d);
        assert!((index.idf(t).unwrap() - (n / d as f64).ln()).abs() < 1e-12, "{t}");
    }
    for (doc, terms) in &counts {
        let tfidf: BTreeMap<&str, f64> = terms
            .iter()
            .map(|(t, &tf)| (t.as_str(), f64::from(tf) * (n / df[t.as_str()] as f64).ln()))
            .collect();
        let max = tfidf.values().copied().fold(0.0, f64::max);
        for t in df.keys() {
            let expected = tfidf.get(t).map_or(0.0, |w| w / max);
            assert!((index.doc_term_weight(doc, t).unwrap() - expected).abs() < 1e-12, "{doc} {t}");
        }
    }
}

#[test]
fn fixture_round_trip_is_byte_stable() {
    let index = build_index(&fixture_corpus());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("index.json");
    save_index(&index, &path).unwrap();
    let loaded = load_index(&path).unwrap();
    assert_eq!(loaded, index);
    assert_eq!(loaded.to_snapshot(), fs::read_to_string(&path).unwrap());
    assert_eq!(build_index(&fixture_corpus()).to_snapshot(), index.to_snapshot());
}

#[test]
fn nested_query_matches_recursive_oracle() {
    let docs = vec![
        Document::new("d1", "apple apple banana"),
        Document::new("d2", "banana cherry"),
        Document::new("d3", "cherry cherry date"),
    ];
    let corpus = Corpus::from_documents(docs, &TokenizerConfig::default()).unwrap();
    let index = build_index(&corpus);
    let ast = parse_query("(apple:0.5 AND banana)^3 OR cherry:0.8").unwrap();
    for doc in ["d1", "d2", "d3"] {
        let w = |t: &str| index.doc_term_weight(doc, t).unwrap();
        let (a, b, c) = (w("apple"), w("banana"), w("cherry"));
        let and = 1.0 - (((1.0 - a).powi(3) * 0.125 + (1.0 - b).powi(3)) / 1.125).cbrt();
        let or = ((and * and + c * c * 0.64) / 1.64).sqrt();
        assert!((score_pnorm(&index, &ast, doc).unwrap() - or).abs() < 1e-12, "{doc}");
    }
}

fn small_docs() -> impl Strategy<Value = Vec<Vec<u8>>> {
    proptest::collection::vec(proptest::collection::vec(0u8..6, 0..8), 1..7)
}

fn corpus_from(docs: &[Vec<u8>]) -> Corpus {
    const WORDS: [&str; 6] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
    let docs = docs
        .iter()
        .enumerate()
        .map(|(i, words)| {
            let body: Vec<&str> = words.iter().map(|&w| WORDS[w as usize]).collect();
            Document::new(format!("d{i}"), body.join(" "))
        })
        .collect();
    Corpus::from_documents(docs, &TokenizerConfig::default()).unwrap()
}

proptest! {
    #[test]
    fn index_round_trip(docs in small_docs()) {
        let index = build_index(&corpus_from(&docs));
        let loaded = mirstat::index::InvertedIndex::from_snapshot(&index.to_snapshot()).unwrap();
        prop_assert_eq!(loaded, index);
    }

    #[test]
    fn df_matches_scan(docs in small_docs()) {
        let corpus = corpus_from(&docs);
        let index = build_index(&corpus);
        let counts = brute_counts(&corpus, &TokenizerConfig::default());
        for term in index.terms() {
            let scanned = counts.values().filter(|c| c.contains_key(term)).count();
            prop_assert_eq!(index.postings(term).unwrap().len(), scanned);
            prop_assert!(scanned >= 1 && scanned <= corpus.len());
        }
    }

    #[test]
    fn weights_bounded_and_attain_one(docs in small_docs()) {
        let index = build_index(&corpus_from(&docs));
        for doc in index.doc_ids().map(str::to_string).collect::<Vec<_>>() {
            let weights: Vec<f64> = index.terms().map(|t| index.doc_term_weight(&doc, t).unwrap()).collect();
            prop_assert!(weights.iter().all(|w| (0.0..=1.0).contains(w)));
            if index.doc_max_tfidf(&doc).unwrap() > 0.0 {
                prop_assert!(weights.contains(&1.0));
            }
        }
    }

    #[test]
    fn bim_matches_per_document_sum(docs in small_docs(), rel_mask in 0u8..64, query in proptest::collection::vec(0u8..6, 1..4)) {
        const WORDS: [&str; 6] = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"];
        let corpus = corpus_from(&docs);
        let index = build_index(&corpus);
        let n = corpus.len();
        let relevant: BTreeSet<String> = (0..n).filter(|i| rel_mask & (1 << i) != 0).map(|i| format!("d{i}")).collect();
        let judgments = RelevanceJudgments::new(relevant.clone(), n).unwrap();
        let terms: Vec<String> = query.iter().map(|&w| WORDS[w as usize].to_string()).collect();
        let ranked = rank_bim(&index, &terms, &judgments, Smoothing::Half, 100).unwrap();

        let counts = brute_counts(&corpus, &TokenizerConfig::default());
        let (big_n, big_r) = (n as f64, relevant.len() as f64);
        let mut expected = Vec::new();
        for (doc, doc_terms) in &counts {
            let mut score = 0.0;
            for t in terms.iter().collect::<BTreeSet<_>>() {
                if !doc_terms.contains_key(t) {
                    continue;
                }
                let with: Vec<&String> = counts.iter().filter(|(_, c)| c.contains_key(t)).map(|(d, _)| d).collect();
                let nk = with.len() as f64;
                let r = with.iter().filter(|d| relevant.contains(**d)).count() as f64;
                let p = (r + 0.5) / (big_r + 1.0);
                let u = (nk - r + 0.5) / (big_n - big_r + 1.0);
                score += ((p / (1.0 - p)) / (u / (1.0 - u))).ln();
            }
            if score > 0.0 {
                expected.push((doc.clone(), score));
            }
        }
        expected.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        // Scores that cancel to zero land on either side of the cutoff depending on summation order.
        expected.retain(|(_, s)| *s > 1e-9);
        let ranked: Vec<_> = ranked.iter().filter(|d| d.score > 1e-9).collect();
        prop_assert_eq!(ranked.len(), expected.len());
        for (got, (doc, score)) in ranked.iter().zip(&expected) {
            prop_assert!((got.score - score).abs() < 1e-9);
            if ranked.iter().filter(|d| (d.score - got.score).abs() < 1e-9).count() == 1 {
                prop_assert_eq!(&got.doc_id, doc);
            }
        }
    }
}

#[test]
fn bim_term_weight_ignores_other_terms() {
    let full = Corpus::from_documents(
        vec![
            Document::new("d1", "cat dog fish"),
            Document::new("d2", "cat bird"),
            Document::new("d3", "dog bird fish"),
            Document::new("d4", "cat"),
            Document::new("d5", "mouse"),
        ],
        &TokenizerConfig::default(),
    )
    .unwrap();
    let only_cat = Corpus::from_documents(
        full.documents()
            .iter()
            .map(|d| {
                let keep: Vec<&str> = d.body.split(' ').filter(|w| *w == "cat").collect();
                Document::new(d.id.clone(), keep.join(" "))
            })
            .collect(),
        &TokenizerConfig::default(),
    )
    .unwrap();
    let judgments = RelevanceJudgments::new(["d1".to_string(), "d2".to_string()], 5).unwrap();
    let terms = vec!["cat".to_string()];
    let a = query_term_weights(&build_index(&full), &terms, &judgments, Smoothing::Half).unwrap();
    let b = query_term_weights(&build_index(&only_cat), &terms, &judgments, Smoothing::Half).unwrap();
    assert_eq!(a, b);
}

/// Random DAG over `n` nodes in index order: the first two are documents,
/// the last is the result, and every other node draws 1..=3 earlier parents.
fn random_dag(rng: &mut StdRng, n: usize) -> (InferenceGraph, Vec<Vec<(usize, f64)>>) {
    let mut graph = InferenceGraph::new();
    let mut parents = vec![Vec::new(); n];
    let ids: Vec<String> = (0..n)
        .map(|i| match i {
            0 | 1 => format!("doc:n{i}"),
            _ if i == n - 1 => "result".to_string(),
            _ => format!("concept:n{i}"),
        })
        .collect();
    for (i, id) in ids.iter().enumerate() {
        let kind = match i {
            0 | 1 => NodeKind::Document,
            _ if i == n - 1 => NodeKind::Result,
            _ => NodeKind::ConceptRep,
        };
        let prior = (kind == NodeKind::Document).then_some(0.5);
        graph.add_node(NetNode { id: id.clone(), kind, prior }).unwrap();
        if i < 2 {
            continue;
        }
        let mut chosen = BTreeSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            chosen.insert(rng.gen_range(0..i));
        }
        for p in chosen {
            let w = rng.gen_range(0.1..5.0);
            graph.add_edge(&ids[p], id, w).unwrap();
            parents[i].push((p, w));
        }
    }
    (graph, parents)
}

#[test]
fn random_dags_match_enumeration_oracle() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..200 {
        let n = 8;
        let (graph, parents) = random_dag(&mut rng, n);
        for (doc, id) in [(0, "n0"), (1, "n1")] {
            let mut belief = vec![0.0; n];
            belief[doc] = 1.0;
            for i in 2..n {
                let lm = LinkMatrix::new(
                    parents[i].iter().map(|(p, _)| belief[*p]).collect(),
                    parents[i].iter().map(|(_, w)| *w).collect(),
                )
                .unwrap();
                belief[i] = eval_link_matrix_enum(&lm).unwrap();
            }
            let got = mirstat::inference_net::score_inference(&graph, id).unwrap();
            assert!((got - belief[n - 1]).abs() < 1e-9, "{got} vs {}", belief[n - 1]);
            let all = graph.beliefs(id).unwrap();
            assert!(all.values().all(|b| (0.0..=1.0).contains(b)));
        }
    }
}

#[test]
fn cycle_is_rejected() {
    let mut graph = InferenceGraph::new();
    for id in ["concept:a", "concept:b"] {
        graph.add_node(NetNode::new(id, NodeKind::ConceptRep)).unwrap();
    }
    graph.add_edge("concept:a", "concept:b", 1.0).unwrap();
    graph.add_edge("concept:b", "concept:a", 1.0).unwrap();
    assert!(matches!(graph.validate(), Err(Error::Cycle)));
}

/// Twenty documents: the first five contain "cat" and "kitten" together, the
/// rest are filler that mentions neither.
fn lca_corpus() -> Corpus {
    let mut docs = Vec::new();
    for i in 0..5 {
        let extra = ["milk", "yarn", "fence", "garden", "window"][i];
        docs.push(Document::new(format!("d{i:02}"), format!("cat cat kitten {extra}")));
    }
    for i in 5..20 {
        let filler = ["stock", "market", "river", "boat", "cloud"];
        docs.push(Document::new(
            format!("d{i:02}"),
            format!("{} {} garden", filler[i % 5], filler[(i + 2) % 5]),
        ));
    }
    Corpus::from_documents(docs, &TokenizerConfig::default()).unwrap()
}

#[test]
fn lca_adds_cooccurring_concept_first() {
    let index = build_index(&lca_corpus());
    let query = WeightedQuery::new(BTreeMap::from([("cat".to_string(), 1.0)]), Origin::User).unwrap();
    let params = LcaParams { m_top: 5, k_concepts: 3, phi: 0.1 };
    let expansion = expand_lca(&index, &query, params).unwrap();
    assert!(expansion.expanded);
    assert_eq!(expansion.concepts.len(), 3);
    assert_eq!(expansion.concepts[0].concept, "kitten");
    assert_eq!(expansion.query.weights["kitten"], 1.0);
    assert_eq!(expansion.query.origin, Origin::Expanded);

    // Brute force over every candidate with the formula written out.
    let top: Vec<String> = rank_pnorm(&index, &query.to_ast(2.0).unwrap(), 5).unwrap().doc_ids();
    let n = 20.0f64;
    let idf_cat = (n / 5.0).ln();
    let mut best = (String::new(), f64::NEG_INFINITY);
    let candidates: BTreeSet<String> = top.iter().flat_map(|d| index.document_terms(d).into_keys()).filter(|t| t != "cat").collect();
    for c in &candidates {
        let af: f64 = top.iter().map(|d| f64::from(index.tf(d, "cat")) * f64::from(index.tf(d, c))).sum();
        let idf_c = (n / index.df(c) as f64).ln();
        let g = if af >= 1.0 { af.ln() } else { 0.0 };
        let belief = (0.1 + g * idf_c / (top.len() as f64).ln()).powf(idf_cat);
        if belief > best.1 {
            best = (c.clone(), belief);
        }
    }
    assert_eq!(best.0, "kitten");
    assert!((expansion.concepts[0].belief - best.1).abs() < 1e-9);
    let docs: Vec<_> = top.iter().map(|d| index.document_terms(d)).collect();
    let direct = lca_belief(&[("cat".into(), idf_cat)], "kitten", index.idf("kitten").unwrap(), &docs, 0.1).unwrap();
    assert_eq!(direct, expansion.concepts[0].belief);
}

#[test]
fn lca_no_match_leaves_query_unchanged() {
    let index = build_index(&lca_corpus());
    let query = WeightedQuery::new(BTreeMap::from([("zebra".to_string(), 1.0)]), Origin::User).unwrap();
    let expansion = expand_lca(&index, &query, LcaParams::default()).unwrap();
    assert!(!expansion.expanded);
    assert_eq!(expansion.query, query);
}

#[test]
fn owl_three_concepts_two_edges() {
    let cg = ConceptGraph::new(
        vec![
            ("animal".into(), "2".into()),
            ("cat".into(), "1.5".into()),
            ("dog".into(), "0.5".into()),
        ],
        vec![("animal".into(), "cat".into()), ("animal".into(), "dog".into())],
    )
    .unwrap();
    let owl = export_owl(&cg).unwrap();
    assert_eq!(owl.class_count, 6);
    assert_eq!(export_owl(&cg).unwrap().text, owl.text);
    let doc = roxmltree::Document::parse(&owl.text).unwrap();
    let owl_ns = "http://www.w3.org/2002/07/owl#";
    let rdf_ns = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
    let classes: Vec<_> = doc.descendants().filter(|n| n.has_tag_name((owl_ns, "Class"))).collect();
    assert_eq!(classes.len(), 6);
    let mut iris = BTreeSet::new();
    for node in doc.descendants() {
        if let Some(about) = node.attribute((rdf_ns, "about")) {
            assert!(iris.insert(about.to_string()), "duplicate IRI {about}");
        }
    }
    let labels: BTreeSet<&str> = classes
        .iter()
        .filter_map(|c| c.children().find(|n| n.has_tag_name("label")).and_then(|l| l.text()))
        .collect();
    assert!(labels.contains("animalcat") && labels.contains("animaldog"));
}
