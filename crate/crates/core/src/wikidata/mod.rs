//! Wikidata access: the fixed candidate-extraction queries, a caching
//! SPARQL SELECT client, result parsing into [`CandidateRecord`]s, and
//! target-profile lookups.
//!
//! Every response is cached on disk (see [`cache::QueryCache`]), so once
//! a cache is warm the entire pipeline runs offline from fixtures.
//!
//! [`CandidateRecord`]: crate::entity::CandidateRecord

pub mod cache;
pub mod client;
pub mod queries;
pub mod results;
pub mod transport;

pub use cache::{CachePolicy, QueryCache};
pub use client::{parse_candidates, CandidateBatch, PageSettings, ParseStats, RetryPolicy, SparqlClient};
pub use queries::{
    build_fictional_candidates_query, build_human_candidates_query, normalize_whitespace,
};
pub use results::ResultsDocument;
pub use transport::{
    CannedTransport, HttpTransport, OfflineTransport, SparqlTransport, TransportResponse,
};

use crate::entity::EntityId;

#[derive(Debug, thiserror::Error)]
pub enum WikidataError {
    /// Transport failure that survived the retry policy.
    #[error("network failure after {attempts} attempt(s): {detail}")]
    Network { attempts: u32, detail: String },
    /// Endpoint answered with a non-success status.
    #[error("endpoint returned HTTP {status}: {body}")]
    Endpoint { status: u16, body: String },
    /// Offline (read-only) cache has no entry for the query.
    #[error("cache miss for key {key} in read-only (offline) mode")]
    CacheMiss { key: String },
    /// Response is not a SPARQL-Results document, or a mandatory IRI in a
    /// binding row is missing or malformed.
    #[error("malformed response: {detail}")]
    MalformedResponse { detail: String },
    #[error("no entity found for {input:?}")]
    EntityNotFound { input: String },
    /// Label resolution found several entities tied at the top sitelinks
    /// count; all tied ids are reported.
    #[error("label {label:?} is ambiguous between {}", format_ids(tied))]
    AmbiguousLabel { label: String, tied: Vec<EntityId> },
    /// The profile has zero occupations, so no modifier can be chosen.
    #[error("entity {id} has no occupation statement")]
    NoOccupation { id: EntityId },
    #[error("invalid input: {reason}")]
    InvalidInput { reason: String },
    #[error("invalid endpoint URL {url:?}: {reason}")]
    InvalidEndpoint { url: String, reason: String },
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn format_ids(ids: &[EntityId]) -> String {
    ids.iter()
        .map(EntityId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}
