//! antonomast: (semi-)automatic generation of Vossian antonomasias —
//! sentences of the form "A is the B of C".
//!
//! The pipeline extracts candidate source entities (B) from a
//! Wikidata-compatible SPARQL endpoint, scores them against a target (A)
//! in embedding space under a projection-based or a translational
//! method, re-ranks the top k by L1 extremality, and renders grammatical
//! English output. A chat-completion baseline prompt and a
//! method-comparison reporter ride along for side-by-side evaluation.
//!
//! Modules:
//! - [`wikidata`]: query builders, caching SELECT client, result parsing
//! - [`embedding`]: pre-trained embedding loading and lookup
//! - [`vecops`]: projection, cosine, and translational-distance kernel
//! - [`pipeline`]: filtering, scoring, ranking, surface realization
//! - [`llm`]: baseline prompt, recorded/live transport, line parsing

pub mod embedding;
pub mod entity;
pub mod llm;
pub mod pipeline;
pub mod vecops;
pub mod wikidata;

pub use embedding::{EmbeddingBackend, EmbeddingIndex, EmbeddingVector};
pub use entity::{CandidateKind, CandidateRecord, EntityId, Gender, Occupation, TargetProfile};
pub use pipeline::{
    generate, CandidateSource, GenerateRequest, GenerationReport, Method, PipelineError,
    RankingParams, VaResult,
};
pub use vecops::TranslationalMode;
pub use wikidata::{QueryCache, SparqlClient, WikidataError};

/// Environment variable overriding the SPARQL endpoint.
pub const ENDPOINT_ENV: &str = "ANTONOMAST_ENDPOINT";
/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "ANTONOMAST_CACHE_DIR";
/// Environment variable (`=1`) forcing read-only (offline) caching.
pub const OFFLINE_ENV: &str = "ANTONOMAST_OFFLINE";

/// Default public SPARQL endpoint.
pub const DEFAULT_ENDPOINT: &str = "https://query.wikidata.org/sparql";

/// Descriptive User-Agent for the public endpoint: tool, version, and a
/// contact URL.
pub fn default_user_agent() -> String {
    format!(
        "antonomast/{} (+https://codeberg.org/antonomast/antonomast)",
        env!("CARGO_PKG_VERSION")
    )
}
