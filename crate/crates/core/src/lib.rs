//! Statistical retrieval over a small document collection.
//!
//! Documents are tokenized into an inverted index and ranked with one of three
//! models: the extended Boolean p-norm model ([`pnorm`]), the binary
//! independence model with log-odds term weights ([`bim`]) and a Bayesian
//! inference network evaluated document-at-a-time ([`inference_net`]).
//! Queries can be expanded with local context analysis and refined with
//! Rocchio feedback ([`expansion`]), stored for later reuse
//! ([`query_store`]), and the concept layer of the inference network can be
//! exported as OWL ([`ontology`]).

pub mod bim;
pub mod corpus;
pub mod engine;
mod error;
pub mod eval;
pub mod expansion;
pub mod index;
pub mod inference_net;
pub mod ontology;
pub mod pnorm;
pub mod query_store;
mod ranked;

pub use crate::error::{Error, Result};
pub use crate::ranked::{RankedList, ScoredDoc};
