use std::collections::BTreeMap;
use std::path::PathBuf;

use mirstat::bim::{estimate, term_weight, RelevanceJudgments, Smoothing, TermRelevanceStats};
use mirstat::corpus::{tokenize as tokenize_text, Document, MediaType, TokenizerConfig};
use mirstat::engine::{Engine, Model};
use mirstat::expansion::{rocchio_refine, LcaParams, Origin, RocchioCoefficients, WeightedQuery};
use mirstat::inference_net::{eval_link_matrix_closed, eval_link_matrix_enum, LinkMatrix};
use mirstat::pnorm;
use mirstat::query_store::{self, QueryStore as CoreStore, DEFAULT_TAU};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Refined vector plus discarded `(term, weight)` pairs.
type Refined = (BTreeMap<String, f64>, Vec<(String, f64)>);

pyo3::create_exception!(pymirstat, MirstatError, PyValueError);

fn to_py(err: mirstat::Error) -> PyErr {
    match err {
        mirstat::Error::Io { .. } => PyOSError::new_err(err.to_string()),
        _ => MirstatError::new_err(err.to_string()),
    }
}

fn model(name: &str) -> PyResult<Model> {
    name.parse().map_err(to_py)
}

fn ranking(list: mirstat::RankedList) -> Vec<(String, f64)> {
    list.into_vec().into_iter().map(|d| (d.doc_id, d.score)).collect()
}

fn config(stopwords: Option<Vec<String>>, stem: bool, min_token_len: usize) -> PyResult<TokenizerConfig> {
    let stopwords = stopwords.unwrap_or_else(|| TokenizerConfig::default().stopwords.into_iter().collect());
    TokenizerConfig::new(stopwords, stem, min_token_len).map_err(to_py)
}

fn query(weights: BTreeMap<String, f64>) -> PyResult<WeightedQuery> {
    WeightedQuery::new(weights, Origin::User).map_err(to_py)
}

/// An indexed corpus that can be searched with the p-norm ("pnorm"), binary
/// independence ("bim") or inference network ("inet") model.
#[pyclass(name = "Engine", module = "pymirstat", frozen)]
struct PyEngine {
    inner: Engine,
}

#[pymethods]
impl PyEngine {
    /// Index every `*.txt` file in `path`.
    #[staticmethod]
    #[pyo3(signature = (path, stopwords=None, stem=true, min_token_len=1))]
    fn from_dir(path: PathBuf, stopwords: Option<Vec<String>>, stem: bool, min_token_len: usize) -> PyResult<Self> {
        let (inner, errors) = Engine::from_dir(path, config(stopwords, stem, min_token_len)?).map_err(to_py)?;
        if let Some(first) = errors.into_iter().next() {
            return Err(to_py(first));
        }
        Ok(PyEngine { inner })
    }

    /// Index in-memory documents given as `{"id": ..., "body": ..., ...}` dicts.
    #[staticmethod]
    #[pyo3(signature = (documents, stopwords=None, stem=true, min_token_len=1))]
    fn from_documents(
        documents: Vec<Bound<'_, PyDict>>,
        stopwords: Option<Vec<String>>,
        stem: bool,
        min_token_len: usize,
    ) -> PyResult<Self> {
        let docs = documents.iter().map(document_from_dict).collect::<PyResult<Vec<_>>>()?;
        let inner = Engine::from_documents(docs, config(stopwords, stem, min_token_len)?).map_err(to_py)?;
        Ok(PyEngine { inner })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyEngine {
            inner: Engine::load(path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.corpus().len()
    }

    fn doc_ids(&self) -> Vec<String> {
        self.inner.corpus().documents().iter().map(|d| d.id.clone()).collect()
    }

    #[pyo3(signature = (query, model="pnorm", k=10, p=None, relevant=None))]
    fn search(&self, query: &str, model: &str, k: usize, p: Option<f64>, relevant: Option<Vec<String>>) -> PyResult<Vec<(String, f64)>> {
        let judgments = relevant
            .map(|ids| RelevanceJudgments::new(ids, self.inner.index().n_docs()))
            .transpose()
            .map_err(to_py)?;
        let model = self::model(model)?;
        self.inner.search(model, query, p, k, judgments.as_ref()).map(ranking).map_err(to_py)
    }

    /// Rank an explicit term -> weight vector with the soft OR.
    #[pyo3(signature = (vector, k=10, p=None))]
    fn search_vector(&self, vector: BTreeMap<String, f64>, k: usize, p: Option<f64>) -> PyResult<Vec<(String, f64)>> {
        self.inner.rank_vector_pnorm(&query(vector)?, p, k).map(ranking).map_err(to_py)
    }

    fn idf(&self, term: &str) -> PyResult<f64> {
        self.inner.index().idf(term).map_err(to_py)
    }

    fn doc_weights(&self, doc_id: &str) -> PyResult<BTreeMap<String, f64>> {
        self.inner.doc_weights(doc_id).map_err(to_py)
    }

    /// Returns `{"expanded": bool, "vector": {...}, "concepts": [(concept, af, belief), ...]}`.
    #[pyo3(signature = (query, m=10, k=5, phi=0.1))]
    fn expand<'py>(&self, py: Python<'py>, query: &str, m: usize, k: usize, phi: f64) -> PyResult<Bound<'py, PyDict>> {
        let expansion = self
            .inner
            .expand(query, LcaParams { m_top: m, k_concepts: k, phi })
            .map_err(to_py)?;
        let out = PyDict::new(py);
        out.set_item("expanded", expansion.expanded)?;
        out.set_item("vector", expansion.query.weights)?;
        let concepts: Vec<(String, f64, f64)> = expansion.concepts.into_iter().map(|c| (c.concept, c.af, c.belief)).collect();
        out.set_item("concepts", concepts)?;
        Ok(out)
    }

    /// Rocchio refinement from judged document ids. Returns the refined
    /// vector and the discarded `(term, new_weight)` pairs.
    #[pyo3(signature = (vector, relevant, nonrelevant, x=None, y=None, z=None))]
    fn refine(
        &self,
        vector: BTreeMap<String, f64>,
        relevant: Vec<String>,
        nonrelevant: Vec<String>,
        x: Option<f64>,
        y: Option<f64>,
        z: Option<f64>,
    ) -> PyResult<Refined> {
        let refined = self.inner.refine(&query(vector)?, &relevant, &nonrelevant, (x, y, z)).map_err(to_py)?;
        let discarded = refined.discarded.into_iter().map(|d| (d.term, d.new_weight)).collect();
        Ok((refined.query.weights, discarded))
    }

    fn ontology(&self) -> PyResult<String> {
        self.inner.ontology().map(|owl| owl.text).map_err(to_py)
    }

    fn document<'py>(&self, py: Python<'py>, doc_id: &str) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(doc) = self.inner.document(doc_id) else {
            return Ok(None);
        };
        let out = PyDict::new(py);
        out.set_item("id", &doc.id)?;
        out.set_item("title", &doc.title)?;
        out.set_item("body", &doc.body)?;
        out.set_item("caption", &doc.caption)?;
        out.set_item("media_type", media_type_name(doc.media_type))?;
        out.set_item("concepts", doc.concepts.iter().cloned().collect::<Vec<_>>())?;
        Ok(Some(out))
    }

    fn __repr__(&self) -> String {
        format!("Engine(documents={}, terms={})", self.inner.corpus().len(), self.inner.index().terms().count())
    }
}

fn media_type_name(m: MediaType) -> &'static str {
    match m {
        MediaType::Text => "text",
        MediaType::Image => "image",
        MediaType::Video => "video",
        MediaType::Audio => "audio",
    }
}

fn document_from_dict(d: &Bound<'_, PyDict>) -> PyResult<Document> {
    let get = |key: &str| -> PyResult<Option<String>> { d.get_item(key)?.map(|v| v.extract()).transpose() };
    let id = get("id")?.ok_or_else(|| MirstatError::new_err("document without an id"))?;
    let mut doc = Document::new(id, get("body")?.unwrap_or_default());
    doc.title = get("title")?.unwrap_or_default();
    doc.caption = get("caption")?.unwrap_or_default();
    if let Some(media) = get("media_type")? {
        doc.media_type = match media.as_str() {
            "text" => MediaType::Text,
            "image" => MediaType::Image,
            "video" => MediaType::Video,
            "audio" => MediaType::Audio,
            other => return Err(MirstatError::new_err(format!("unknown media type {other:?}"))),
        };
    }
    if let Some(concepts) = d.get_item("concepts")? {
        doc.concepts = concepts.extract()?;
    }
    Ok(doc)
}

/// Stored queries with cosine-similarity lookup. In memory unless a path is given.
#[pyclass(name = "QueryStore", module = "pymirstat")]
struct PyQueryStore {
    inner: CoreStore,
}

#[pymethods]
impl PyQueryStore {
    #[new]
    #[pyo3(signature = (path=None))]
    fn new(path: Option<PathBuf>) -> PyResult<Self> {
        let inner = match path {
            Some(path) => CoreStore::open(path).map_err(to_py)?,
            None => CoreStore::in_memory(),
        };
        Ok(PyQueryStore { inner })
    }

    #[pyo3(signature = (vector, results=Vec::new()))]
    fn save(&mut self, vector: BTreeMap<String, f64>, results: Vec<String>) -> PyResult<String> {
        let q = query(vector)?;
        Ok(self.inner.save(&q, results).map_err(to_py)?.id.clone())
    }

    /// `(id, similarity)` of the best stored match at or above `tau`.
    #[pyo3(signature = (vector, tau=DEFAULT_TAU))]
    fn find_reusable(&self, vector: BTreeMap<String, f64>, tau: f64) -> PyResult<Option<(String, f64)>> {
        let q = query(vector)?;
        Ok(self.inner.find_reusable(&q, tau).map_err(to_py)?.map(|(hit, sim)| (hit.id.clone(), sim)))
    }

    fn results(&self, id: &str) -> Option<Vec<String>> {
        self.inner.get(id).map(|q| q.result_doc_ids.clone())
    }

    fn __len__(&self) -> usize {
        self.inner.entries().len()
    }
}

#[pyfunction]
#[pyo3(signature = (text, stem=true, stopwords=None, min_token_len=1))]
fn tokenize(text: &str, stem: bool, stopwords: Option<Vec<String>>, min_token_len: usize) -> PyResult<Vec<String>> {
    Ok(tokenize_text(text, &config(stopwords, stem, min_token_len)?))
}

/// Parses a weighted Boolean query and returns its canonical form.
#[pyfunction]
fn parse_query(input: &str) -> PyResult<String> {
    pnorm::parse_query(input).map(|ast| ast.to_string()).map_err(to_py)
}

#[pyfunction]
fn eval_and(doc_weights: Vec<f64>, query_weights: Vec<f64>, p: f64) -> PyResult<f64> {
    pnorm::eval_and(&doc_weights, &query_weights, p).map_err(to_py)
}

#[pyfunction]
fn eval_or(doc_weights: Vec<f64>, query_weights: Vec<f64>, p: f64) -> PyResult<f64> {
    pnorm::eval_or(&doc_weights, &query_weights, p).map_err(to_py)
}

/// Link-matrix belief; `enumerate=True` sums all 2^n parent columns.
#[pyfunction]
#[pyo3(signature = (probs, weights, enumerate=false))]
fn link_matrix(probs: Vec<f64>, weights: Vec<f64>, enumerate: bool) -> PyResult<f64> {
    let lm = LinkMatrix::new(probs, weights).map_err(to_py)?;
    if enumerate {
        eval_link_matrix_enum(&lm).map_err(to_py)
    } else {
        Ok(eval_link_matrix_closed(&lm))
    }
}

/// Term relevance weight from counts: `n_docs`, documents with the term,
/// relevant documents, relevant documents with the term.
#[pyfunction]
#[pyo3(signature = (n_docs, n, n_relevant, r, smoothing="half"))]
fn bim_weight<'py>(
    py: Python<'py>,
    n_docs: usize,
    n: usize,
    n_relevant: usize,
    r: usize,
    smoothing: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let smoothing = match smoothing {
        "raw" => Smoothing::Raw,
        "half" => Smoothing::Half,
        other => return Err(MirstatError::new_err(format!("unknown smoothing {other:?}"))),
    };
    let judgments = RelevanceJudgments::new((0..n_relevant).map(|i| i.to_string()), n_docs).map_err(to_py)?;
    let (p, u) = estimate(TermRelevanceStats { n, r }, &judgments, smoothing).map_err(to_py)?;
    let w = term_weight(p, u).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("p", w.p_k)?;
    out.set_item("u", w.u_k)?;
    out.set_item("relevant_odds", w.relevant_odds)?;
    out.set_item("nonrelevant_odds", w.nonrelevant_odds)?;
    out.set_item("odds_ratio", w.odds_ratio)?;
    out.set_item("log_weight", w.log_weight)?;
    Ok(out)
}

/// Rocchio update over explicit document vectors.
#[pyfunction]
fn rocchio(
    old: BTreeMap<String, f64>,
    relevant: Vec<BTreeMap<String, f64>>,
    nonrelevant: Vec<BTreeMap<String, f64>>,
    x: f64,
    y: f64,
    z: f64,
) -> PyResult<Refined> {
    let refined = rocchio_refine(&query(old)?, &relevant, &nonrelevant, RocchioCoefficients { x, y, z }).map_err(to_py)?;
    let discarded = refined.discarded.into_iter().map(|d| (d.term, d.new_weight)).collect();
    Ok((refined.query.weights, discarded))
}

#[pyfunction]
fn similarity(a: BTreeMap<String, f64>, b: BTreeMap<String, f64>) -> f64 {
    query_store::similarity(&a, &b)
}

#[pymodule]
fn pymirstat(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("MirstatError", m.py().get_type::<MirstatError>())?;
    m.add_class::<PyEngine>()?;
    m.add_class::<PyQueryStore>()?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(parse_query, m)?)?;
    m.add_function(wrap_pyfunction!(eval_and, m)?)?;
    m.add_function(wrap_pyfunction!(eval_or, m)?)?;
    m.add_function(wrap_pyfunction!(link_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(bim_weight, m)?)?;
    m.add_function(wrap_pyfunction!(rocchio, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    Ok(())
}
