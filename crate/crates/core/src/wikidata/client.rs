//! The caching SPARQL SELECT client and the parsers that turn result
//! documents into domain records.

use std::collections::HashSet;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::Serialize;

use crate::entity::{CandidateKind, CandidateRecord, EntityId, Gender, Occupation, TargetProfile};

use super::cache::{CachePolicy, QueryCache};
use super::queries;
use super::results::{Binding, ResultsDocument};
use super::transport::SparqlTransport;
use super::WikidataError;

const GENDER_MALE: &str = "Q6581097";
const GENDER_FEMALE: &str = "Q6581072";

/// Retry behaviour for transient endpoint trouble: up to `attempts`
/// tries with exponential backoff starting at `base_delay`, honoring
/// `Retry-After` when the endpoint sends one.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            attempts: 3,
            base_delay: Duration::from_secs(1),
        }
    }
}

impl RetryPolicy {
    /// Policy with no sleeping between attempts, for tests.
    pub fn immediate(attempts: u32) -> Self {
        RetryPolicy {
            attempts,
            base_delay: Duration::ZERO,
        }
    }

    fn delay_before(&self, retry_index: u32) -> Duration {
        // 1x, 2x, 4x ... of the base delay.
        self.base_delay * 2u32.saturating_pow(retry_index)
    }
}

/// LIMIT/OFFSET paging for the candidate extractions.
#[derive(Debug, Clone, Copy)]
pub struct PageSettings {
    pub page_size: u64,
    /// Stop after this many raw result rows.
    pub max_rows: u64,
}

impl Default for PageSettings {
    fn default() -> Self {
        PageSettings {
            page_size: 5_000,
            max_rows: 50_000,
        }
    }
}

/// Row-level diagnostics from candidate parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ParseStats {
    /// Raw binding rows seen.
    pub rows: usize,
    /// Records kept.
    pub kept: usize,
    /// Rows dropped for a missing or empty label.
    pub dropped_missing_label: usize,
    /// Rows dropped for violating the kind's sitelinks bound.
    pub dropped_sitelinks: usize,
    /// Rows dropped for a missing or malformed optional field.
    pub dropped_malformed: usize,
    /// Rows dropped as duplicate (item, occupation) pairs.
    pub deduplicated: usize,
}

/// Parsed candidates plus diagnostics and the cache keys that served them.
#[derive(Debug, Clone)]
pub struct CandidateBatch {
    pub records: Vec<CandidateRecord>,
    pub stats: ParseStats,
    pub cache_keys: Vec<String>,
}

/// Counting gate bounding concurrent transport requests.
struct InFlightGate {
    permits: Mutex<usize>,
    available: Condvar,
}

impl InFlightGate {
    fn new(max: usize) -> Self {
        InFlightGate {
            permits: Mutex::new(max),
            available: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightPermit<'_> {
        let mut permits = self.permits.lock().expect("poisoned gate");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("poisoned gate");
        }
        *permits -= 1;
        InFlightPermit { gate: self }
    }
}

struct InFlightPermit<'a> {
    gate: &'a InFlightGate,
}

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.gate.permits.lock().expect("poisoned gate") += 1;
        self.gate.available.notify_one();
    }
}

pub struct SparqlClient {
    endpoint: String,
    cache: QueryCache,
    transport: Arc<dyn SparqlTransport>,
    retry: RetryPolicy,
    // Public-endpoint etiquette: one request in flight by default,
    // at most two when configured up.
    request_gate: InFlightGate,
    used_keys: Mutex<Vec<String>>,
}

impl SparqlClient {
    pub fn new(
        endpoint: impl Into<String>,
        cache: QueryCache,
        transport: Arc<dyn SparqlTransport>,
    ) -> Result<Self, WikidataError> {
        let endpoint = endpoint.into();
        let parsed = url::Url::parse(&endpoint).map_err(|e| WikidataError::InvalidEndpoint {
            url: endpoint.clone(),
            reason: e.to_string(),
        })?;
        if parsed.cannot_be_a_base() {
            return Err(WikidataError::InvalidEndpoint {
                url: endpoint,
                reason: "endpoint must be an absolute URL".to_owned(),
            });
        }
        Ok(SparqlClient {
            endpoint,
            cache,
            transport,
            retry: RetryPolicy::default(),
            request_gate: InFlightGate::new(1),
            used_keys: Mutex::new(Vec::new()),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Allow up to `max` concurrent requests; the supported range is 1..=2.
    pub fn with_max_in_flight(mut self, max: usize) -> Self {
        self.request_gate = InFlightGate::new(max.clamp(1, 2));
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn cache(&self) -> &QueryCache {
        &self.cache
    }

    /// Cache keys of every query served so far, in order of use.
    pub fn used_cache_keys(&self) -> Vec<String> {
        self.used_keys.lock().expect("poisoned key log").clone()
    }

    /// Run a SELECT query through the cache and, when the policy allows,
    /// the network. Cache hits return the stored document byte-for-byte;
    /// network fetches under `ReadWrite` are persisted before returning.
    pub fn execute_select(&self, query: &str) -> Result<ResultsDocument, WikidataError> {
        let key = QueryCache::key_for(query);
        self.used_keys
            .lock()
            .expect("poisoned key log")
            .push(key.clone());

        match self.cache.policy() {
            CachePolicy::ReadOnly => match self.cache.load(&key)? {
                Some(bytes) => ResultsDocument::parse(bytes, key),
                None => Err(WikidataError::CacheMiss { key }),
            },
            CachePolicy::ReadWrite => {
                if let Some(bytes) = self.cache.load(&key)? {
                    return ResultsDocument::parse(bytes, key);
                }
                let body = self.fetch(query)?;
                let doc = ResultsDocument::parse(body, key)?;
                self.cache.store(query, doc.raw())?;
                Ok(doc)
            }
            CachePolicy::Bypass => {
                let body = self.fetch(query)?;
                ResultsDocument::parse(body, key)
            }
        }
    }

    fn fetch(&self, query: &str) -> Result<Vec<u8>, WikidataError> {
        let _permit = self.request_gate.acquire();
        let mut last_failure = String::new();
        // A Retry-After header replaces the backoff for the next attempt.
        let mut wait_override: Option<Duration> = None;
        for attempt in 0..self.retry.attempts {
            if attempt > 0 {
                let delay = wait_override
                    .take()
                    .unwrap_or_else(|| self.retry.delay_before(attempt - 1));
                std::thread::sleep(delay);
            }
            match self.transport.execute(&self.endpoint, query) {
                Ok(response) if (200..300).contains(&response.status) => {
                    return Ok(response.body);
                }
                Ok(response) => {
                    let retryable = response.status == 429 || response.status >= 500;
                    if retryable && attempt + 1 < self.retry.attempts {
                        wait_override = response.retry_after;
                        last_failure = format!("HTTP {}", response.status);
                        continue;
                    }
                    return Err(WikidataError::Endpoint {
                        status: response.status,
                        body: String::from_utf8_lossy(&response.body).into_owned(),
                    });
                }
                Err(failure) => {
                    last_failure = failure.message;
                }
            }
        }
        Err(WikidataError::Network {
            attempts: self.retry.attempts,
            detail: last_failure,
        })
    }

    /// Run one of the candidate-extraction queries page by page and parse
    /// the rows, de-duplicating (item, occupation) pairs across pages.
    pub fn fetch_candidates(
        &self,
        kind: CandidateKind,
        min_sitelinks: u64,
        pages: &PageSettings,
    ) -> Result<CandidateBatch, WikidataError> {
        let base = match kind {
            CandidateKind::Fictional => queries::build_fictional_candidates_query(min_sitelinks),
            CandidateKind::Human => queries::build_human_candidates_query(min_sitelinks),
        };

        let mut records = Vec::new();
        let mut stats = ParseStats::default();
        let mut seen = HashSet::new();
        let mut cache_keys = Vec::new();
        let mut offset = 0u64;

        loop {
            let limit = pages.page_size.min(pages.max_rows - offset);
            let query = queries::with_page(&base, limit, offset);
            let doc = self.execute_select(&query)?;
            cache_keys.push(doc.cache_key().to_owned());
            let page_rows = doc.bindings().len() as u64;
            parse_candidates_into(&doc, kind, min_sitelinks, &mut seen, &mut records, &mut stats)?;

            offset += page_rows;
            if page_rows < limit || offset >= pages.max_rows {
                break;
            }
        }

        Ok(CandidateBatch {
            records,
            stats,
            cache_keys,
        })
    }

    /// Resolve a label or id to a full target profile.
    ///
    /// A well-formed Q/P id skips label resolution entirely. A label is
    /// matched against English labels and aliases; ties on the top
    /// sitelinks count are reported as [`WikidataError::AmbiguousLabel`].
    pub fn fetch_target_profile(&self, label_or_id: &str) -> Result<TargetProfile, WikidataError> {
        let input = label_or_id.trim();
        if input.is_empty() {
            return Err(WikidataError::InvalidInput {
                reason: "target must be an entity id or a non-empty label".to_owned(),
            });
        }
        let id = match EntityId::from_str(input) {
            Ok(id) => id,
            Err(_) => self.resolve_label(input)?,
        };
        self.fetch_profile_by_id(&id)
    }

    fn resolve_label(&self, label: &str) -> Result<EntityId, WikidataError> {
        let query = queries::label_resolution_query(label);
        let doc = self.execute_select(&query)?;

        let mut rows: Vec<(EntityId, u64)> = Vec::new();
        for binding in doc.bindings() {
            let id = required_entity_id(binding, "item")?;
            let sitelinks = binding
                .get("sitelinks")
                .and_then(|v| v.value.parse::<u64>().ok())
                .unwrap_or(0);
            rows.push((id, sitelinks));
        }
        if rows.is_empty() {
            return Err(WikidataError::EntityNotFound {
                input: label.to_owned(),
            });
        }

        let top = rows.iter().map(|(_, s)| *s).max().expect("non-empty rows");
        let mut tied: Vec<EntityId> = rows
            .into_iter()
            .filter(|(_, s)| *s == top)
            .map(|(id, _)| id)
            .collect();
        tied.sort();
        tied.dedup();
        if tied.len() > 1 {
            return Err(WikidataError::AmbiguousLabel {
                label: label.to_owned(),
                tied,
            });
        }
        Ok(tied.remove(0))
    }

    fn fetch_profile_by_id(&self, id: &EntityId) -> Result<TargetProfile, WikidataError> {
        let query = queries::target_profile_query(id);
        let doc = self.execute_select(&query)?;
        if doc.bindings().is_empty() {
            return Err(WikidataError::EntityNotFound {
                input: id.to_string(),
            });
        }

        let mut label = id.to_string();
        if let Some(value) = doc.bindings()[0].get("itemLabel") {
            if !value.value.is_empty() {
                label = value.value.clone();
            }
        }

        let mut occupations: Vec<Occupation> = Vec::new();
        let mut seen = HashSet::new();
        let mut has_date_of_death = false;
        let mut gender = Gender::Unknown;

        for binding in doc.bindings() {
            if binding.get("dateOfDeath").is_some() {
                has_date_of_death = true;
            }
            if gender == Gender::Unknown {
                if let Some(value) = binding.get("gender") {
                    gender = match entity_id_from_iri(&value.value).as_deref() {
                        Some(GENDER_MALE) => Gender::Male,
                        Some(GENDER_FEMALE) => Gender::Female,
                        _ => Gender::Unknown,
                    };
                }
            }
            if let Some(value) = binding.get("occupation") {
                let occ_id = parse_entity_id(&value.value).ok_or_else(|| {
                    WikidataError::MalformedResponse {
                        detail: format!("occupation IRI {:?} is not an entity", value.value),
                    }
                })?;
                if seen.insert(occ_id.clone()) {
                    let occ_label = binding
                        .get("occupationLabel")
                        .map(|v| v.value.clone())
                        .filter(|l| !l.is_empty())
                        .unwrap_or_else(|| occ_id.to_string());
                    occupations.push(Occupation {
                        id: occ_id,
                        label: occ_label,
                    });
                }
            }
        }

        if occupations.is_empty() {
            return Err(WikidataError::NoOccupation { id: id.clone() });
        }

        Ok(TargetProfile {
            id: id.clone(),
            label,
            occupations,
            has_date_of_death,
            gender,
        })
    }
}

/// Turn a result document into candidate records.
///
/// Rows violating the kind's sitelinks bound or missing a label are
/// dropped and counted; duplicate (item, occupation) pairs keep the first
/// occurrence. A missing or malformed `item`/`occupation` IRI aborts with
/// [`WikidataError::MalformedResponse`].
pub fn parse_candidates(
    doc: &ResultsDocument,
    kind: CandidateKind,
    min_sitelinks: u64,
) -> Result<(Vec<CandidateRecord>, ParseStats), WikidataError> {
    let mut records = Vec::new();
    let mut stats = ParseStats::default();
    let mut seen = HashSet::new();
    parse_candidates_into(doc, kind, min_sitelinks, &mut seen, &mut records, &mut stats)?;
    Ok((records, stats))
}

fn parse_candidates_into(
    doc: &ResultsDocument,
    kind: CandidateKind,
    min_sitelinks: u64,
    seen: &mut HashSet<(EntityId, EntityId)>,
    records: &mut Vec<CandidateRecord>,
    stats: &mut ParseStats,
) -> Result<(), WikidataError> {
    for binding in doc.bindings() {
        stats.rows += 1;

        let id = required_entity_id(binding, "item")?;
        let occupation_id = required_entity_id(binding, "occupation")?;

        let label = binding
            .get("itemLabel")
            .map(|v| v.value.as_str())
            .unwrap_or("");
        if label.is_empty() {
            stats.dropped_missing_label += 1;
            continue;
        }

        let sitelinks = match binding.get("sitelinks").map(|v| v.value.parse::<u64>()) {
            Some(Ok(n)) => n,
            _ => {
                stats.dropped_malformed += 1;
                continue;
            }
        };
        let within_bound = match kind {
            CandidateKind::Fictional => sitelinks > min_sitelinks,
            CandidateKind::Human => sitelinks >= min_sitelinks,
        };
        if !within_bound {
            stats.dropped_sitelinks += 1;
            continue;
        }

        if !seen.insert((id.clone(), occupation_id.clone())) {
            stats.deduplicated += 1;
            continue;
        }

        let occupation_label = binding
            .get("occupationLabel")
            .map(|v| v.value.clone())
            .filter(|l| !l.is_empty())
            .unwrap_or_else(|| occupation_id.to_string());

        stats.kept += 1;
        records.push(CandidateRecord {
            id,
            label: label.to_owned(),
            occupation_id,
            occupation_label,
            sitelinks,
            kind,
        });
    }
    Ok(())
}

fn required_entity_id(binding: &Binding, var: &str) -> Result<EntityId, WikidataError> {
    let value = binding
        .get(var)
        .ok_or_else(|| WikidataError::MalformedResponse {
            detail: format!("binding row is missing the {var:?} IRI"),
        })?;
    parse_entity_id(&value.value).ok_or_else(|| WikidataError::MalformedResponse {
        detail: format!("{var:?} value {:?} is not an entity IRI", value.value),
    })
}

/// Extract the trailing Q/P id from an entity IRI (or accept a bare id).
fn parse_entity_id(value: &str) -> Option<EntityId> {
    let tail = value.rsplit('/').next().unwrap_or(value);
    EntityId::from_str(tail).ok()
}

fn entity_id_from_iri(value: &str) -> Option<String> {
    parse_entity_id(value).map(|id| id.to_string())
}
