//! On-disk cache for SPARQL responses, keyed by the SHA-256 digest of the
//! whitespace-normalized query text.
//!
//! Layout: `<root>/<sha256-hex>.json` holds the raw response body;
//! `<root>/manifest.tsv` maps each digest to the first 120 characters of
//! its query. Entries are written to a temporary file and renamed into
//! place, so concurrent readers never observe partial files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::queries::normalize_whitespace;
use super::WikidataError;

pub const MANIFEST_FILE: &str = "manifest.tsv";
const MANIFEST_SNIPPET_CHARS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    /// Serve hits, fetch and persist misses.
    ReadWrite,
    /// Offline: serve hits, treat misses as errors, never touch the network.
    ReadOnly,
    /// Ignore the cache entirely (always fetch, never persist).
    Bypass,
}

#[derive(Debug, Clone)]
pub struct QueryCache {
    root: PathBuf,
    policy: CachePolicy,
}

impl QueryCache {
    pub fn new(root: impl Into<PathBuf>, policy: CachePolicy) -> Self {
        QueryCache {
            root: root.into(),
            policy,
        }
    }

    pub fn policy(&self) -> CachePolicy {
        self.policy
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// The cache key of a query: SHA-256 hex digest of its
    /// whitespace-normalized text.
    pub fn key_for(query: &str) -> String {
        let digest = Sha256::digest(normalize_whitespace(query).as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.root.join(format!("{key}.json"))
    }

    /// Stored body for `key`, or `None` on a miss.
    pub fn load(&self, key: &str) -> Result<Option<Vec<u8>>, WikidataError> {
        let path = self.entry_path(key);
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(WikidataError::Io {
                path: path.display().to_string(),
                source,
            }),
        }
    }

    /// Persist a response body under the key of `query` and record the
    /// query snippet in the manifest. Returns the key.
    pub fn store(&self, query: &str, body: &[u8]) -> Result<String, WikidataError> {
        let key = Self::key_for(query);
        fs::create_dir_all(&self.root).map_err(|source| WikidataError::Io {
            path: self.root.display().to_string(),
            source,
        })?;
        let path = self.entry_path(&key);
        let fresh = !path.exists();

        let mut tmp =
            tempfile::NamedTempFile::new_in(&self.root).map_err(|source| WikidataError::Io {
                path: self.root.display().to_string(),
                source,
            })?;
        tmp.write_all(body).map_err(|source| WikidataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        tmp.persist(&path).map_err(|e| WikidataError::Io {
            path: path.display().to_string(),
            source: e.error,
        })?;

        if fresh {
            self.append_manifest(&key, query)?;
        }
        Ok(key)
    }

    fn append_manifest(&self, key: &str, query: &str) -> Result<(), WikidataError> {
        let normalized = normalize_whitespace(query);
        let snippet: String = normalized.chars().take(MANIFEST_SNIPPET_CHARS).collect();
        let path = self.root.join(MANIFEST_FILE);
        let mut file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|source| WikidataError::Io {
                path: path.display().to_string(),
                source,
            })?;
        writeln!(file, "{key}\t{snippet}").map_err(|source| WikidataError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// `(digest, query snippet)` pairs from the manifest, in store order.
    pub fn manifest_entries(&self) -> Result<Vec<(String, String)>, WikidataError> {
        let path = self.root.join(MANIFEST_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => {
                return Err(WikidataError::Io {
                    path: path.display().to_string(),
                    source,
                })
            }
        };
        Ok(text
            .lines()
            .filter_map(|line| {
                line.split_once('\t')
                    .map(|(k, v)| (k.to_owned(), v.to_owned()))
            })
            .collect())
    }

    /// Delete every cached entry and the manifest. Returns the number of
    /// response files removed.
    pub fn clear(&self) -> Result<usize, WikidataError> {
        let mut removed = 0usize;
        let entries = match fs::read_dir(&self.root) {
            Ok(entries) => entries,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(source) => {
                return Err(WikidataError::Io {
                    path: self.root.display().to_string(),
                    source,
                })
            }
        };
        for entry in entries.flatten() {
            let path = entry.path();
            let name = entry.file_name();
            let name = name.to_string_lossy();
            let is_entry = name.ends_with(".json") && name.len() == 64 + ".json".len();
            if is_entry || name == MANIFEST_FILE {
                fs::remove_file(&path).map_err(|source| WikidataError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                if is_entry {
                    removed += 1;
                }
            }
        }
        Ok(removed)
    }
}
