//! Measure, normalize, and mitigate indexical (positional) bias in ranked
//! document lists.
//!
//! Indexical bias is bias that arises from the *order* in which documents are
//! presented, not from the content of any single document. This crate
//! provides:
//!
//! - the DUO metric family (unsupervised, embedding-based) plus the
//!   supervised rND / rKL metrics over protected-group labels ([`metrics`]);
//! - min/max normalization of discounted sums over permutations, exact for
//!   short rankings and by seeded local search for long ones ([`extrema`]);
//! - PCA polarization axes fitted on labeled reference documents, projection
//!   to scalar polarity scores, and embedding debiasing ([`polarization`]);
//! - bias-extremizing reranking for mitigation or stimulus construction
//!   ([`rerank`]);
//! - a reference BM25 retriever so audits run end to end without external
//!   systems ([`bm25`]);
//! - Spearman rank correlation and the two-predictor OLS regression used to
//!   validate bias scores against behavioral data ([`stats`]);
//! - TREC-style run/qrels ingestion and JSONL corpus formats ([`corpus`]);
//! - the audit/polarize/rerank/regress/describe pipelines behind the
//!   `indexical` CLI ([`pipeline`]).

pub mod bm25;
pub mod corpus;
pub mod embed_client;
pub mod error;
pub mod extrema;
pub mod metrics;
pub mod pipeline;
pub mod polarization;
pub mod rerank;
pub mod report;
pub mod stats;

pub use corpus::{Document, EmbeddingStore, EmbeddingVector, Qrels, Query, Ranking};
pub use error::Error;
pub use extrema::{ExtremaResult, UtilityKind, EXACT_LIMIT};
pub use metrics::{MetricConfig, MetricValue, Normalization, PolarityList, VarianceMode};
pub use polarization::{DistractorSets, MultiAxis, PolarizationAxis};
pub use rerank::{Objective, RerankRequest};

/// Crate result type.
pub type Result<T> = std::result::Result<T, Error>;
