//! Loading and serving pre-trained embeddings.
//!
//! Two backends share one file format and one lookup surface:
//!
//! - `KnowledgeGraph`: entity vectors keyed by raw Q/P identifiers,
//! - `Word`: token vectors keyed by lowercase words; multiword labels are
//!   composed as the mean of their in-vocabulary token vectors.
//!
//! The on-disk format is the common whitespace-delimited text layout
//! (`key v1 v2 … vd`, one record per line) with an optional `count dim`
//! header line. Mapping external alias lists onto Q-ids is a preprocessing
//! step and never happens here.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::entity::EntityId;

/// A dense real vector. Components are always finite and the dimension is
/// always positive; both are enforced at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbeddingError> {
        if values.is_empty() {
            return Err(EmbeddingError::EmptyVector);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFiniteComponent);
        }
        Ok(EmbeddingVector { values })
    }

    /// Constructor for values already known to be finite and non-empty
    /// (arithmetic on validated vectors).
    pub(crate) fn from_computed(values: Vec<f64>) -> Self {
        debug_assert!(!values.is_empty());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        EmbeddingVector { values }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Component-wise scaling; useful for constructing test geometries.
    pub fn scaled(&self, factor: f64) -> Result<Self, EmbeddingError> {
        EmbeddingVector::new(self.values.iter().map(|v| v * factor).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingBackend {
    KnowledgeGraph,
    Word,
}

impl fmt::Display for EmbeddingBackend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingBackend::KnowledgeGraph => f.write_str("kg"),
            EmbeddingBackend::Word => f.write_str("word"),
        }
    }
}

impl FromStr for EmbeddingBackend {
    type Err = EmbeddingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kg" | "knowledge-graph" | "knowledge_graph" => Ok(EmbeddingBackend::KnowledgeGraph),
            "word" => Ok(EmbeddingBackend::Word),
            other => Err(EmbeddingError::UnknownBackend {
                value: other.to_owned(),
            }),
        }
    }
}

/// Diagnostics collected while loading an embedding file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct LoadStats {
    /// Records kept in the index.
    pub records: usize,
    /// Later records whose key had already been seen (first one wins).
    pub duplicate_keys: usize,
    /// Records skipped because the key does not fit the backend's key space.
    pub skipped_keys: usize,
    /// Whether a `count dim` header line was detected and skipped.
    pub header_skipped: bool,
}

/// Result of composing a vector for a (possibly multiword) label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelLookup {
    pub vector: Option<EmbeddingVector>,
    pub tokens_found: usize,
    pub tokens_total: usize,
}

/// An immutable in-memory map from entity key to vector. All entries share
/// one dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    backend: EmbeddingBackend,
    dim: usize,
    entries: HashMap<String, EmbeddingVector>,
    stats: LoadStats,
}

impl EmbeddingIndex {
    /// Parse the whitespace-delimited text format from `path`.
    ///
    /// The dimension is inferred from the first record; any later record of
    /// a different length is a [`EmbeddingError::DimensionMismatch`] with
    /// its line number. Word-backend keys are lowercased; knowledge-graph
    /// keys that are not well-formed Q/P ids are skipped and counted.
    pub fn load_text(
        path: impl AsRef<Path>,
        backend: EmbeddingBackend,
    ) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| EmbeddingError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_text(&text, backend)
    }

    fn parse_text(text: &str, backend: EmbeddingBackend) -> Result<Self, EmbeddingError> {
        let mut stats = LoadStats::default();
        let mut entries: HashMap<String, EmbeddingVector> = HashMap::new();
        let mut dim: Option<usize> = None;

        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let key = tokens.next().expect("non-empty line has a first token");
            let rest: Vec<&str> = tokens.collect();

            // A first line of exactly two integer tokens is the
            // conventional `count dim` header.
            if idx == 0
                && rest.len() == 1
                && key.parse::<u64>().is_ok()
                && rest[0].parse::<u64>().is_ok()
            {
                stats.header_skipped = true;
                continue;
            }

            let mut values = Vec::with_capacity(rest.len());
            for token in &rest {
                let value: f64 = token.parse().map_err(|_| EmbeddingError::Parse {
                    line: line_no,
                    token: (*token).to_owned(),
                })?;
                if !value.is_finite() {
                    return Err(EmbeddingError::Parse {
                        line: line_no,
                        token: (*token).to_owned(),
                    });
                }
                values.push(value);
            }

            match dim {
                None => {
                    if values.is_empty() {
                        return Err(EmbeddingError::Parse {
                            line: line_no,
                            token: String::from("<no vector components>"),
                        });
                    }
                    dim = Some(values.len());
                }
                Some(expected) if values.len() != expected => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: line_no,
                        expected,
                        found: values.len(),
                    });
                }
                Some(_) => {}
            }

            let key = match backend {
                EmbeddingBackend::Word => key.to_lowercase(),
                EmbeddingBackend::KnowledgeGraph => {
                    if key.parse::<EntityId>().is_err() {
                        stats.skipped_keys += 1;
                        continue;
                    }
                    key.to_owned()
                }
            };

            if entries.contains_key(&key) {
                stats.duplicate_keys += 1;
                continue;
            }
            entries.insert(key, EmbeddingVector::from_computed(values));
        }

        let dim = dim.ok_or(EmbeddingError::EmptyFile)?;
        if entries.is_empty() {
            return Err(EmbeddingError::EmptyFile);
        }
        stats.records = entries.len();
        Ok(EmbeddingIndex {
            backend,
            dim,
            entries,
            stats,
        })
    }

    /// Build an index directly from key/vector pairs (synthetic sets,
    /// programmatic callers). Same invariants as the file loader.
    pub fn from_entries(
        backend: EmbeddingBackend,
        pairs: impl IntoIterator<Item = (String, Vec<f64>)>,
    ) -> Result<Self, EmbeddingError> {
        let mut entries: HashMap<String, EmbeddingVector> = HashMap::new();
        let mut dim: Option<usize> = None;
        let mut stats = LoadStats::default();
        for (key, values) in pairs {
            let vector = EmbeddingVector::new(values)?;
            match dim {
                None => dim = Some(vector.dim()),
                Some(expected) if vector.dim() != expected => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: 0,
                        expected,
                        found: vector.dim(),
                    });
                }
                Some(_) => {}
            }
            let key = match backend {
                EmbeddingBackend::Word => key.to_lowercase(),
                EmbeddingBackend::KnowledgeGraph => key,
            };
            if entries.contains_key(&key) {
                stats.duplicate_keys += 1;
                continue;
            }
            entries.insert(key, vector);
        }
        let dim = dim.ok_or(EmbeddingError::EmptyFile)?;
        stats.records = entries.len();
        Ok(EmbeddingIndex {
            backend,
            dim,
            entries,
            stats,
        })
    }

    pub fn backend(&self) -> EmbeddingBackend {
        self.backend
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    /// Exact, case-sensitive key lookup. Absence is a value, not an error.
    pub fn lookup(&self, key: &str) -> Option<&EmbeddingVector> {
        self.entries.get(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Compose a vector for a label on the word backend: lowercase, split
    /// on whitespace and hyphens, and average the vectors of the tokens
    /// that are in vocabulary. `vector` is `None` when no token was found.
    pub fn label_vector(&self, label: &str) -> Result<LabelLookup, EmbeddingError> {
        if self.backend != EmbeddingBackend::Word {
            return Err(EmbeddingError::WrongBackend {
                expected: EmbeddingBackend::Word,
                actual: self.backend,
            });
        }
        let lowered = label.to_lowercase();
        let tokens: Vec<&str> = lowered
            .split(|c: char| c.is_whitespace() || c == '-')
            .filter(|t| !t.is_empty())
            .collect();

        let mut sum = vec![0.0f64; self.dim];
        let mut found = 0usize;
        for token in &tokens {
            if let Some(vector) = self.entries.get(*token) {
                for (acc, v) in sum.iter_mut().zip(vector.values()) {
                    *acc += v;
                }
                found += 1;
            }
        }

        let vector = if found == 0 {
            None
        } else {
            let n = found as f64;
            Some(EmbeddingVector::from_computed(
                sum.into_iter().map(|v| v / n).collect(),
            ))
        };
        Ok(LabelLookup {
            vector,
            tokens_found: found,
            tokens_total: tokens.len(),
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("failed to read embedding file {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding file contains no records")]
    EmptyFile,
    #[error("line {line}: vector has {found} components, expected {expected}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse {token:?} as a finite number")]
    Parse { line: usize, token: String },
    #[error("operation requires the {expected} backend, index is {actual}")]
    WrongBackend {
        expected: EmbeddingBackend,
        actual: EmbeddingBackend,
    },
    #[error("unknown embedding backend {value:?} (expected \"kg\" or \"word\")")]
    UnknownBackend { value: String },
    #[error("embedding vectors must be non-empty")]
    EmptyVector,
    #[error("embedding vectors must have finite components")]
    NonFiniteComponent,
}
