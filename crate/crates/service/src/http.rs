//! JSON API over an [`Engine`] and a [`QueryStore`].

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use mirstat::bim::RelevanceJudgments;
use mirstat::engine::{Engine, Model};
use mirstat::expansion::{DiscardedTerm, LcaParams, Origin, WeightedQuery, DEFAULT_PHI};
use mirstat::query_store::{PersistentQuery, QueryStore, DEFAULT_TAU};
use mirstat::{Error, RankedList};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

const DEFAULT_K: usize = 10;

pub struct AppState {
    engine: Option<Arc<Engine>>,
    store: RwLock<QueryStore>,
    tau: f64,
}

impl AppState {
    pub fn new(engine: Option<Engine>, store: QueryStore) -> Self {
        AppState {
            engine: engine.map(Arc::new),
            store: RwLock::new(store),
            tau: DEFAULT_TAU,
        }
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/search", post(search))
        .route("/api/expand", post(expand))
        .route("/api/feedback", post(feedback))
        .route("/api/queries", get(queries))
        .route("/api/documents/{id}", get(document))
        .route("/api/ontology.owl", get(ontology))
        .route("/api/health", get(health))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
        })
        .with_state(Arc::new(state))
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    column: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            column: None,
        }
    }

    fn no_index() -> Self {
        Self::new(StatusCode::CONFLICT, "no_index", "no index is loaded")
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let (status, code, column) = match &err {
            Error::Syntax { column, .. } => (StatusCode::BAD_REQUEST, "parse_error", Some(*column)),
            Error::Range { column, .. } => (StatusCode::BAD_REQUEST, "range_error", Some(*column)),
            Error::UnknownDocument(_) => (StatusCode::NOT_FOUND, "unknown_document", None),
            Error::Io { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "storage_error", None),
            _ => (StatusCode::BAD_REQUEST, "invalid_request", None),
        };
        ApiError {
            status,
            code,
            message: err.to_string(),
            column,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut error = json!({"code": self.code, "message": self.message});
        if let Some(column) = self.column {
            error["column"] = json!(column);
        }
        (self.status, Json(json!({"status": "error", "error": error}))).into_response()
    }
}

type ApiResult = Result<Json<Value>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_json", e.to_string()))
}

fn engine(state: &AppState) -> Result<&Engine, ApiError> {
    state.engine.as_deref().ok_or_else(ApiError::no_index)
}

fn results_json(engine: &Engine, ranked: &RankedList) -> Value {
    ranked
        .iter()
        .map(|d| {
            let doc = engine.document(&d.doc_id);
            json!({
                "doc_id": d.doc_id,
                "score": d.score,
                "title": doc.map(|d| d.title.as_str()).unwrap_or(""),
                "snippet": engine.snippet(&d.doc_id).unwrap_or_default(),
            })
        })
        .collect()
}

fn save_query(state: &AppState, vector: &WeightedQuery, ranked: &RankedList) -> Result<PersistentQuery, ApiError> {
    let mut store = state.store.write().expect("query store lock poisoned");
    Ok(store.save(vector, ranked.doc_ids())?.clone())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchRequest {
    #[serde(default)]
    query: Option<String>,
    #[serde(default)]
    terms: Option<Vec<String>>,
    #[serde(default)]
    vector: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    model: Model,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    p: Option<f64>,
    #[serde(default)]
    reuse: bool,
    #[serde(default)]
    relevant: Vec<String>,
}

async fn search(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: SearchRequest = parse_body(&body)?;
    let engine = engine(&state)?;
    let k = req.k.unwrap_or(DEFAULT_K);
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()).into());
    }
    let text = match (&req.query, &req.terms) {
        (Some(q), None) => Some(q.clone()),
        (None, Some(terms)) => Some(terms.join(" ")),
        (None, None) => None,
        (Some(_), Some(_)) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "give either query or terms, not both"))
        }
    };
    let (vector, ranked) = match (text, req.vector) {
        (Some(text), None) => {
            let vector = engine.query_vector(&text, req.model, req.p)?;
            let judgments = RelevanceJudgments::new(req.relevant.iter().cloned(), engine.index().n_docs())?;
            if let Some(unknown) = judgments.relevant.iter().find(|id| !engine.index().contains_doc(id)) {
                return Err(Error::UnknownDocument(unknown.clone()).into());
            }
            let ranked = engine.search(req.model, &text, req.p, k, Some(&judgments))?;
            (vector, ranked)
        }
        (None, Some(weights)) => {
            let vector = WeightedQuery::new(weights, Origin::User)?;
            let ranked = match req.model {
                Model::Pnorm => engine.rank_vector_pnorm(&vector, req.p, k)?,
                Model::Inet => engine.rank_vector_inet(&vector, k)?,
                Model::Bim => {
                    return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "bim takes query terms, not a vector"))
                }
            };
            (vector, ranked)
        }
        _ => return Err(ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", "give exactly one of query, terms or vector")),
    };
    if vector.is_empty() {
        return Err(Error::InvalidArgument("query has no indexable terms".into()).into());
    }

    let reused = if req.reuse {
        let store = state.store.read().expect("query store lock poisoned");
        store
            .find_reusable(&vector, state.tau)?
            .map(|(hit, sim)| (hit.clone(), sim))
    } else {
        None
    };
    let mut response = json!({
        "status": "ok",
        "model": req.model,
        "vector": vector.weights,
        "results": results_json(engine, &ranked),
    });
    match reused {
        Some((hit, similarity)) => {
            response["query_id"] = json!(hit.id);
            response["reused_from"] = json!(hit.id);
            response["similarity"] = json!(similarity);
            response["reused_results"] = json!(hit.result_doc_ids);
        }
        None => {
            let saved = save_query(&state, &vector, &ranked)?;
            response["query_id"] = json!(saved.id);
        }
    }
    Ok(Json(response))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpandRequest {
    query: String,
    #[serde(default)]
    m: Option<usize>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    phi: Option<f64>,
}

async fn expand(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: ExpandRequest = parse_body(&body)?;
    let engine = engine(&state)?;
    let defaults = LcaParams::default();
    let params = LcaParams {
        m_top: req.m.unwrap_or(defaults.m_top),
        k_concepts: req.k.unwrap_or(defaults.k_concepts),
        phi: req.phi.unwrap_or(DEFAULT_PHI),
    };
    let expansion = engine.expand(&req.query, params)?;
    let ranked = engine.rank_vector_pnorm(&expansion.query, None, DEFAULT_K)?;
    let saved = save_query(&state, &expansion.query, &ranked)?;
    Ok(Json(json!({
        "status": "ok",
        "query_id": saved.id,
        "expanded": expansion.expanded,
        "no_expansion": !expansion.expanded,
        "vector": expansion.query.weights,
        "concepts": expansion.concepts,
        "results": results_json(engine, &ranked),
    })))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    query_id: String,
    #[serde(default)]
    relevant: Vec<String>,
    #[serde(default)]
    nonrelevant: Vec<String>,
    #[serde(default)]
    x: Option<f64>,
    #[serde(default)]
    y: Option<f64>,
    #[serde(default)]
    z: Option<f64>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    p: Option<f64>,
}

#[derive(Serialize)]
struct FeedbackResponse<'a> {
    status: &'static str,
    query_id: Option<String>,
    refined_from: &'a str,
    vector: &'a BTreeMap<String, f64>,
    discarded: &'a [DiscardedTerm],
    warning: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning_message: Option<&'static str>,
    results: Value,
}

async fn feedback(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let req: FeedbackRequest = parse_body(&body)?;
    let engine = engine(&state)?;
    let stored = {
        let store = state.store.read().expect("query store lock poisoned");
        store.get(&req.query_id).cloned()
    }
    .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_query", format!("no stored query {:?}", req.query_id)))?;
    let old = WeightedQuery::new(stored.vector, Origin::Refined)?;
    let refinement = engine.refine(&old, &req.relevant, &req.nonrelevant, (req.x, req.y, req.z))?;
    let k = req.k.unwrap_or(DEFAULT_K);

    let all_discarded = refinement.query.is_empty();
    let ranking_query = if all_discarded { &old } else { &refinement.query };
    let ranked = engine.rank_vector_pnorm(ranking_query, req.p, k)?;
    let query_id = if all_discarded {
        None
    } else {
        Some(save_query(&state, &refinement.query, &ranked)?.id)
    };
    let response = FeedbackResponse {
        status: "ok",
        query_id,
        refined_from: &req.query_id,
        vector: &refinement.query.weights,
        discarded: &refinement.discarded,
        warning: all_discarded,
        warning_message: all_discarded.then_some("every term was discarded; results use the previous query"),
        results: results_json(engine, &ranked),
    };
    Ok(Json(serde_json::to_value(response).expect("response serializes")))
}

async fn queries(State(state): State<Arc<AppState>>) -> ApiResult {
    let store = state.store.read().expect("query store lock poisoned");
    Ok(Json(json!({"status": "ok", "queries": store.entries()})))
}

async fn document(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let engine = engine(&state)?;
    let doc = engine.document(&id).ok_or_else(|| Error::UnknownDocument(id.clone()))?;
    Ok(Json(json!({"status": "ok", "document": doc})))
}

async fn ontology(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let owl = engine(&state)?.ontology()?;
    Ok(([(header::CONTENT_TYPE, "application/rdf+xml")], owl.text).into_response())
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let documents = state.engine.as_ref().map(|e| e.corpus().len());
    let stored = state.store.read().expect("query store lock poisoned").entries().len();
    Json(json!({
        "status": "ok",
        "index_loaded": documents.is_some(),
        "documents": documents,
        "stored_queries": stored,
    }))
}
