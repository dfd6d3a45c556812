//! HTTP transport abstraction for SPARQL requests.
//!
//! The client talks to a [`SparqlTransport`] rather than to reqwest
//! directly, so offline runs can be proven network-free: tests and the
//! `--offline` CLI path plug in transports that count (and refuse) calls.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use super::queries::normalize_whitespace;

/// One raw endpoint response, before any caching or JSON parsing.
#[derive(Debug, Clone)]
pub struct TransportResponse {
    pub status: u16,
    pub body: Vec<u8>,
    /// Parsed `Retry-After` header, when the endpoint sent one.
    pub retry_after: Option<Duration>,
}

/// A transport-level failure (connection refused, timeout, TLS, ...).
/// HTTP error statuses are not failures at this level; they come back as
/// a [`TransportResponse`].
#[derive(Debug, Clone, thiserror::Error)]
#[error("{message}")]
pub struct TransportFailure {
    pub message: String,
}

pub trait SparqlTransport: Send + Sync {
    fn execute(&self, endpoint: &str, query: &str) -> Result<TransportResponse, TransportFailure>;

    /// Number of requests this transport has attempted. Real transports
    /// may return 0; instrumented ones track it so offline behaviour can
    /// be asserted.
    fn calls(&self) -> usize {
        0
    }
}

/// Production transport: POSTs the query form-encoded and asks for
/// `application/sparql-results+json`.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
    calls: AtomicUsize,
}

impl HttpTransport {
    /// `user_agent` must be descriptive: tool name, version, and a contact
    /// URL, per public-endpoint etiquette.
    pub fn new(user_agent: &str) -> Result<Self, TransportFailure> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(user_agent)
            .timeout(Duration::from_secs(90))
            .build()
            .map_err(|e| TransportFailure {
                message: format!("failed to build HTTP client: {e}"),
            })?;
        Ok(HttpTransport {
            client,
            calls: AtomicUsize::new(0),
        })
    }
}

impl SparqlTransport for HttpTransport {
    fn execute(&self, endpoint: &str, query: &str) -> Result<TransportResponse, TransportFailure> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let response = self
            .client
            .post(endpoint)
            .header("Accept", "application/sparql-results+json")
            .form(&[("query", query)])
            .send()
            .map_err(|e| TransportFailure {
                message: format!("request to {endpoint} failed: {e}"),
            })?;

        let status = response.status().as_u16();
        let retry_after = response
            .headers()
            .get("Retry-After")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse::<u64>().ok())
            .map(Duration::from_secs);
        let body = response
            .bytes()
            .map_err(|e| TransportFailure {
                message: format!("failed to read response body: {e}"),
            })?
            .to_vec();
        Ok(TransportResponse {
            status,
            body,
            retry_after,
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Transport that refuses every request. Used under `--offline`, where a
/// warm cache must answer everything; any call reaching it is a bug.
#[derive(Debug, Default)]
pub struct OfflineTransport {
    calls: AtomicUsize,
}

impl OfflineTransport {
    pub fn new() -> Self {
        Self::default()
    }
}

impl SparqlTransport for OfflineTransport {
    fn execute(&self, _endpoint: &str, _query: &str) -> Result<TransportResponse, TransportFailure> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Err(TransportFailure {
            message: "offline mode: network access is disabled".to_owned(),
        })
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

/// Transport serving canned bodies keyed by normalized query text, with a
/// call counter. Unknown queries get a 404.
#[derive(Debug, Default)]
pub struct CannedTransport {
    bodies: HashMap<String, Vec<u8>>,
    calls: AtomicUsize,
}

impl CannedTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: &str, body: impl Into<Vec<u8>>) {
        self.bodies.insert(normalize_whitespace(query), body.into());
    }
}

impl SparqlTransport for CannedTransport {
    fn execute(&self, _endpoint: &str, query: &str) -> Result<TransportResponse, TransportFailure> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        match self.bodies.get(&normalize_whitespace(query)) {
            Some(body) => Ok(TransportResponse {
                status: 200,
                body: body.clone(),
                retry_after: None,
            }),
            None => Ok(TransportResponse {
                status: 404,
                body: b"no canned response for query".to_vec(),
                retry_after: None,
            }),
        }
    }

    fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}
