//! The standard SPARQL-Results JSON document (head/results/bindings).

use std::collections::BTreeMap;

use serde::Deserialize;

use super::WikidataError;

/// One cell of a result row: `{"type": "...", "value": "...", ...}`.
#[derive(Debug, Clone, Deserialize)]
pub struct BindingValue {
    #[serde(rename = "type")]
    pub kind: String,
    pub value: String,
    #[serde(default)]
    pub datatype: Option<String>,
    #[serde(default, rename = "xml:lang")]
    pub lang: Option<String>,
}

/// One result row, keyed by variable name.
pub type Binding = BTreeMap<String, BindingValue>;

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Head {
    #[serde(default)]
    pub vars: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct ResultsSection {
    bindings: Vec<Binding>,
}

#[derive(Debug, Clone, Deserialize)]
struct RawDocument {
    #[serde(default)]
    head: Head,
    results: ResultsSection,
}

/// A parsed SPARQL-Results document plus the raw bytes it was parsed
/// from (cache hits hand those bytes back verbatim) and the cache key it
/// is stored under.
#[derive(Debug, Clone)]
pub struct ResultsDocument {
    raw: Vec<u8>,
    head: Head,
    bindings: Vec<Binding>,
    cache_key: String,
}

impl ResultsDocument {
    /// Parse `raw`, requiring the `results.bindings` structure.
    pub fn parse(raw: Vec<u8>, cache_key: String) -> Result<Self, WikidataError> {
        let doc: RawDocument =
            serde_json::from_slice(&raw).map_err(|e| WikidataError::MalformedResponse {
                detail: format!("not a SPARQL-Results document (missing results.bindings?): {e}"),
            })?;
        Ok(ResultsDocument {
            raw,
            head: doc.head,
            bindings: doc.results.bindings,
            cache_key,
        })
    }

    pub fn raw(&self) -> &[u8] {
        &self.raw
    }

    pub fn head(&self) -> &Head {
        &self.head
    }

    pub fn bindings(&self) -> &[Binding] {
        &self.bindings
    }

    pub fn cache_key(&self) -> &str {
        &self.cache_key
    }
}
