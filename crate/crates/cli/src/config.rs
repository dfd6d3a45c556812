//! Run configuration, resolved with precedence
//! flags > environment > config file (JSON) > defaults.

use std::path::PathBuf;
use std::sync::Arc;

use serde::Deserialize;

use antonomast::embedding::{EmbeddingBackend, EmbeddingIndex};
use antonomast::wikidata::{
    CachePolicy, HttpTransport, OfflineTransport, QueryCache, SparqlClient, SparqlTransport,
};
use antonomast::{CACHE_DIR_ENV, DEFAULT_ENDPOINT, ENDPOINT_ENV, OFFLINE_ENV};

use crate::{Failure, GlobalArgs};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Tsv,
}

/// Optional overrides read from `--config <file>`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    endpoint: Option<String>,
    cache_dir: Option<PathBuf>,
    offline: Option<bool>,
    embeddings: Option<PathBuf>,
    backend: Option<String>,
    format: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub endpoint: String,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub embeddings: Option<PathBuf>,
    pub backend: EmbeddingBackend,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn resolve(globals: &crate::GlobalArgs) -> Result<Self, String> {
        let file = load_file_config(globals)?;

        let endpoint = pick(
            globals.endpoint.clone(),
            env_string(ENDPOINT_ENV),
            file.endpoint,
            DEFAULT_ENDPOINT.to_owned(),
        );
        let cache_dir = pick(
            globals.cache_dir.clone(),
            env_string(CACHE_DIR_ENV).map(PathBuf::from),
            file.cache_dir,
            default_cache_dir(),
        );
        // --offline and ANTONOMAST_OFFLINE=1 can only turn offline on.
        let offline = globals.offline || env_offline() || file.offline.unwrap_or(false);
        let embeddings = globals
            .embeddings
            .clone()
            .or(file.embeddings);
        let backend = match globals.backend.clone().or(file.backend) {
            Some(name) => name
                .parse::<EmbeddingBackend>()
                .map_err(|e| e.to_string())?,
            None => EmbeddingBackend::KnowledgeGraph,
        };
        let format = match globals.format {
            Some(crate::FormatArg::Text) => OutputFormat::Text,
            Some(crate::FormatArg::Json) => OutputFormat::Json,
            Some(crate::FormatArg::Tsv) => OutputFormat::Tsv,
            None => match file.format.as_deref() {
                Some("text") | None => OutputFormat::Text,
                Some("json") => OutputFormat::Json,
                Some("tsv") => OutputFormat::Tsv,
                Some(other) => return Err(format!("unknown format {other:?} in config file")),
            },
        };

        Ok(RunConfig {
            endpoint,
            cache_dir,
            offline,
            embeddings,
            backend,
            format,
        })
    }

    /// Offline forces the read-only policy everywhere.
    pub fn cache_policy(&self) -> CachePolicy {
        if self.offline {
            CachePolicy::ReadOnly
        } else {
            CachePolicy::ReadWrite
        }
    }

    pub fn query_cache(&self) -> QueryCache {
        QueryCache::new(&self.cache_dir, self.cache_policy())
    }

    pub fn sparql_client(&self) -> Result<SparqlClient, Failure> {
        let transport: Arc<dyn SparqlTransport> = if self.offline {
            Arc::new(OfflineTransport::new())
        } else {
            Arc::new(
                HttpTransport::new(&antonomast::default_user_agent())
                    .map_err(|e| Failure::other(e.to_string()))?,
            )
        };
        SparqlClient::new(self.endpoint.clone(), self.query_cache(), transport)
            .map_err(|e| Failure::usage(e.to_string()))
    }

    pub fn embedding_index(&self) -> Result<EmbeddingIndex, Failure> {
        let path = self.embeddings.as_ref().ok_or_else(|| {
            Failure::usage("an embeddings file is required (--embeddings <path>)")
        })?;
        EmbeddingIndex::load_text(path, self.backend).map_err(|e| Failure::other(e.to_string()))
    }
}

fn load_file_config(globals: &GlobalArgs) -> Result<FileConfig, String> {
    let Some(path) = &globals.config else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("failed to read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

fn pick<T>(flag: Option<T>, env: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(env).or(file).unwrap_or(default)
}

fn env_string(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

fn env_offline() -> bool {
    matches!(
        std::env::var(OFFLINE_ENV).ok().as_deref(),
        Some("1") | Some("true")
    )
}

fn default_cache_dir() -> PathBuf {
    match std::env::var_os("HOME") {
        Some(home) => PathBuf::from(home).join(".cache").join("antonomast"),
        None => PathBuf::from("antonomast-cache"),
    }
}
