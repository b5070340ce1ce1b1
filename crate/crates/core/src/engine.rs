//! A corpus, its index and the derived inference network bundled behind one
//! query interface. The CLI, HTTP service and Python bindings all go through
//! [`Engine`].

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bim::{rank_bim, RelevanceJudgments, Smoothing};
use crate::corpus::{ingest_corpus, tokenize, Corpus, Document, TokenizerConfig};
use crate::eval::{evaluate_rankings, EvalReport};
use crate::expansion::{expand_lca, rocchio_refine, Expansion, LcaParams, Refinement, RocchioCoefficients, WeightedQuery};
use crate::index::{build_index, load_index, save_index, InvertedIndex};
use crate::inference_net::{attach_query_network, build_document_network, rank_inference, InferenceGraph};
use crate::ontology::{concept_graph_from_inference, export_owl, ConceptGraph, OwlDocument};
use crate::pnorm::{parse_query_with_p, rank_pnorm, QueryAst, DEFAULT_P};
use crate::{Error, RankedList, Result};

pub const DOCS_VERSION: &str = "mirstat-docs/1";
pub const SNIPPET_CHARS: usize = 160;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    #[default]
    Pnorm,
    Bim,
    Inet,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pnorm" => Ok(Model::Pnorm),
            "bim" => Ok(Model::Bim),
            "inet" => Ok(Model::Inet),
            _ => Err(Error::InvalidArgument(format!("unknown model {s:?}; expected pnorm, bim or inet"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocsFile {
    version: String,
    tokenizer: TokenizerConfig,
    documents: Vec<Document>,
}

#[derive(Debug)]
pub struct Engine {
    config: TokenizerConfig,
    corpus: Corpus,
    index: InvertedIndex,
    network: OnceLock<Option<InferenceGraph>>,
}

/// Companion file holding the documents next to an index snapshot.
pub fn docs_path(index_path: &Path) -> PathBuf {
    index_path.with_extension("docs.json")
}

impl Engine {
    pub fn from_corpus(corpus: Corpus, config: TokenizerConfig) -> Self {
        let index = build_index(&corpus);
        Engine {
            config,
            corpus,
            index,
            network: OnceLock::new(),
        }
    }

    pub fn from_documents(documents: Vec<Document>, config: TokenizerConfig) -> Result<Self> {
        let corpus = Corpus::from_documents(documents, &config)?;
        Ok(Self::from_corpus(corpus, config))
    }

    /// Ingests `dir`; files that could not be read are returned alongside.
    pub fn from_dir(dir: impl AsRef<Path>, config: TokenizerConfig) -> Result<(Self, Vec<Error>)> {
        let ingested = ingest_corpus(dir, &config)?;
        Ok((Self::from_corpus(ingested.corpus, config), ingested.errors))
    }

    /// Writes the index snapshot to `index_path` and the documents to
    /// [`docs_path`]`(index_path)`.
    pub fn save(&self, index_path: impl AsRef<Path>) -> Result<()> {
        let index_path = index_path.as_ref();
        save_index(&self.index, index_path)?;
        let docs = DocsFile {
            version: DOCS_VERSION.to_string(),
            tokenizer: self.config.clone(),
            documents: self.corpus.documents().to_vec(),
        };
        let value = serde_json::to_value(&docs).map_err(|e| Error::Snapshot(e.to_string()))?;
        let mut text = value.to_string();
        text.push('\n');
        let path = docs_path(index_path);
        fs::write(&path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a snapshot written by [`Engine::save`]. Without the documents
    /// file each document is reconstructed from its postings, so rankings are
    /// unchanged but titles and snippets are lost.
    pub fn load(index_path: impl AsRef<Path>) -> Result<Self> {
        let index_path = index_path.as_ref();
        let index = load_index(index_path)?;
        let path = docs_path(index_path);
        let (config, documents) = match fs::read_to_string(&path) {
            Ok(text) => {
                let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::json(&text, &e))?;
                let found = value.get("version").and_then(|v| v.as_str()).unwrap_or("");
                if found != DOCS_VERSION {
                    return Err(Error::Version {
                        found: found.to_string(),
                        expected: DOCS_VERSION.to_string(),
                    });
                }
                let docs: DocsFile = serde_json::from_value(value).map_err(|e| Error::Snapshot(format!("{}: {e}", path.display())))?;
                (docs.tokenizer, docs.documents)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (TokenizerConfig::default(), documents_from_postings(&index)),
            Err(e) => return Err(Error::io(path, e)),
        };
        let corpus = Corpus::from_documents(documents, &config)?;
        if build_index(&corpus) != index {
            return Err(Error::Snapshot(format!(
                "{} does not match the index snapshot",
                path.display()
            )));
        }
        Ok(Engine {
            config,
            corpus,
            index,
            network: OnceLock::new(),
        })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    /// The document network, built on first use. `None` for an empty corpus.
    pub fn network(&self) -> Option<&InferenceGraph> {
        self.network
            .get_or_init(|| build_document_network(&self.corpus, &self.index).ok())
            .as_ref()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.corpus.document(id)
    }

    /// The first [`SNIPPET_CHARS`] characters of the body.
    pub fn snippet(&self, id: &str) -> Option<String> {
        self.document(id).map(|d| d.body.chars().take(SNIPPET_CHARS).collect())
    }

    /// Parses a p-norm query and maps its terms through the tokenizer.
    pub fn parse(&self, query: &str, p: Option<f64>) -> Result<QueryAst> {
        Ok(parse_query_with_p(query, p.unwrap_or(DEFAULT_P))?.normalized(&self.config))
    }

    /// Free-text query terms for the BIM and inference models.
    pub fn query_terms(&self, query: &str) -> Vec<String> {
        tokenize(query, &self.config)
    }

    /// The query vector a search would store.
    pub fn query_vector(&self, query: &str, model: Model, p: Option<f64>) -> Result<WeightedQuery> {
        match model {
            Model::Pnorm => Ok(WeightedQuery::from_ast(&self.parse(query, p)?)),
            Model::Bim | Model::Inet => Ok(WeightedQuery::from_terms(&self.query_terms(query))),
        }
    }

    pub fn search_pnorm(&self, query: &str, p: Option<f64>, k: usize) -> Result<RankedList> {
        rank_pnorm(&self.index, &self.parse(query, p)?, k)
    }

    pub fn search_bim(&self, query: &str, judgments: &RelevanceJudgments, smoothing: Smoothing, k: usize) -> Result<RankedList> {
        let terms = self.query_terms(query);
        if terms.is_empty() {
            return Err(Error::InvalidArgument(format!("query {query:?} has no indexable terms")));
        }
        rank_bim(&self.index, &terms, judgments, smoothing, k)
    }

    pub fn search_inet(&self, query: &str, k: usize) -> Result<RankedList> {
        let terms = self.query_terms(query);
        self.rank_vector_inet(&WeightedQuery::from_terms(&terms), k)
    }

    /// Inference-network ranking for an explicit weighted query.
    pub fn rank_vector_inet(&self, query: &WeightedQuery, k: usize) -> Result<RankedList> {
        if query.is_empty() {
            return Err(Error::InvalidArgument("query has no indexable terms".into()));
        }
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let Some(network) = self.network() else {
            return Ok(RankedList::default());
        };
        let graph = attach_query_network(network.clone(), &query.terms())?;
        rank_inference(&graph, k)
    }

    /// Soft-OR p-norm ranking for an explicit weighted query.
    pub fn rank_vector_pnorm(&self, query: &WeightedQuery, p: Option<f64>, k: usize) -> Result<RankedList> {
        rank_pnorm(&self.index, &query.to_ast(p.unwrap_or(DEFAULT_P))?, k)
    }

    /// Ranks with the chosen model. `judgments` only affects BIM; without
    /// them BIM runs with an empty relevant set and half smoothing.
    pub fn search(&self, model: Model, query: &str, p: Option<f64>, k: usize, judgments: Option<&RelevanceJudgments>) -> Result<RankedList> {
        match model {
            Model::Pnorm => self.search_pnorm(query, p, k),
            Model::Bim => {
                let none = RelevanceJudgments::new([], self.index.n_docs())?;
                self.search_bim(query, judgments.unwrap_or(&none), Smoothing::Half, k)
            }
            Model::Inet => self.search_inet(query, k),
        }
    }

    pub fn expand(&self, query: &str, params: LcaParams) -> Result<Expansion> {
        let vector = WeightedQuery::from_ast(&self.parse(query, None)?);
        expand_lca(&self.index, &vector, params)
    }

    /// Normalized tf·idf weight of every term in document `id`.
    pub fn doc_weights(&self, id: &str) -> Result<BTreeMap<String, f64>> {
        if !self.index.contains_doc(id) {
            return Err(Error::UnknownDocument(id.to_string()));
        }
        self.index
            .document_terms(id)
            .into_keys()
            .map(|term| {
                let w = self.index.doc_term_weight(id, &term)?;
                Ok((term, w))
            })
            .collect()
    }

    /// Rocchio refinement from judged document ids. Unset coefficients take
    /// the defaults of [`RocchioCoefficients::with_defaults`].
    pub fn refine(
        &self,
        old: &WeightedQuery,
        relevant: &[String],
        nonrelevant: &[String],
        coefficients: (Option<f64>, Option<f64>, Option<f64>),
    ) -> Result<Refinement> {
        let vectors = |ids: &[String]| -> Result<Vec<BTreeMap<String, f64>>> {
            ids.iter().collect::<BTreeSet<_>>().into_iter().map(|id| self.doc_weights(id)).collect()
        };
        let (rd, nrd) = (vectors(relevant)?, vectors(nonrelevant)?);
        let (x, y, z) = coefficients;
        rocchio_refine(old, &rd, &nrd, RocchioCoefficients::with_defaults(old, &rd, &nrd, x, y, z))
    }

    pub fn concept_graph(&self) -> ConceptGraph {
        self.network().map(concept_graph_from_inference).unwrap_or_default()
    }

    pub fn ontology(&self) -> Result<OwlDocument> {
        export_owl(&self.concept_graph())
    }

    /// Precision and recall at `k` for each query ranked with `model`.
    pub fn evaluate(&self, queries: &[String], qrels: &BTreeMap<String, BTreeSet<String>>, model: Model, k: usize) -> Result<EvalReport> {
        if let Some(missing) = queries.iter().find(|q| !qrels.contains_key(*q)) {
            return Err(Error::MissingQrels(missing.clone()));
        }
        let rankings = queries
            .iter()
            .map(|q| Ok((q.clone(), self.search(model, q, None, k, None)?.doc_ids())))
            .collect::<Result<Vec<_>>>()?;
        evaluate_rankings(&rankings, qrels, k)
    }
}

fn documents_from_postings(index: &InvertedIndex) -> Vec<Document> {
    index
        .forward()
        .into_iter()
        .map(|(id, terms)| {
            let words: Vec<&str> = terms
                .iter()
                .flat_map(|(term, &tf)| std::iter::repeat_n(term.as_str(), tf as usize))
                .collect();
            Document::new(id, words.join(" "))
        })
        .collect()
}
