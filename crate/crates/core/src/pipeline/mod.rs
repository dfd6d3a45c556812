//! Generation pipeline: modifier selection, candidate filtering, scoring
//! under the projection or translational method, top-k ranking with the
//! L1 extremality re-rank, and sentence assembly.

pub mod report;
pub mod surface;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingBackend, EmbeddingError, EmbeddingIndex, EmbeddingVector};
use crate::entity::{CandidateKind, CandidateRecord, EntityId, Occupation, TargetProfile};
use crate::vecops::{self, TranslationalMode, VectorError, DEGENERACY_EPSILON};
use crate::wikidata::{PageSettings, ParseStats, SparqlClient, WikidataError};

pub use surface::{pluralize_modifier, render_va, select_verb, Verb};

/// Scoring method for ranking candidates against the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Cosine similarity after projecting target and candidate onto the
    /// hyperplane perpendicular to the modifier vector.
    Projection,
    /// Cosine similarity of translation residuals (or raw vectors in
    /// plain mode).
    Translational,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Projection => f.write_str("projection"),
            Method::Translational => f.write_str("translational"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingParams {
    pub method: Method,
    /// Top-k size; at least 1.
    pub k: usize,
    /// Re-sort the top-k by descending L1 norm of the candidates' raw
    /// embeddings.
    pub extremal_rerank: bool,
    pub translational_mode: TranslationalMode,
}

impl Default for RankingParams {
    fn default() -> Self {
        RankingParams {
            method: Method::Projection,
            k: 10,
            extremal_rerank: true,
            translational_mode: TranslationalMode::Residual,
        }
    }
}

/// Why a candidate was passed over instead of scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    OutOfVocabulary,
    SameOccupation,
    IsTarget,
    Degenerate,
    MissingOccupationVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreOutcome {
    Scored { similarity: f64, l1: f64 },
    Skipped { reason: SkipReason },
}

/// One candidate's scoring outcome: either a similarity (plus the L1
/// norm of its raw embedding) or a skip reason, never both.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VaCandidateScore {
    pub candidate: CandidateRecord,
    pub outcome: ScoreOutcome,
}

impl VaCandidateScore {
    pub fn scored(&self) -> Option<(f64, f64)> {
        match self.outcome {
            ScoreOutcome::Scored { similarity, l1 } => Some((similarity, l1)),
            ScoreOutcome::Skipped { .. } => None,
        }
    }

    pub fn skip_reason(&self) -> Option<SkipReason> {
        match self.outcome {
            ScoreOutcome::Skipped { reason } => Some(reason),
            ScoreOutcome::Scored { .. } => None,
        }
    }
}

/// A candidate ready for scoring: its record, its embedding (when in
/// vocabulary), and its own occupation's embedding (when available).
#[derive(Debug, Clone)]
pub struct ScoringInput {
    pub record: CandidateRecord,
    pub vector: Option<EmbeddingVector>,
    pub occupation_vector: Option<EmbeddingVector>,
}

/// Counts of removals performed by [`filter_candidates`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterStats {
    pub removed_is_target: usize,
    pub removed_same_occupation: usize,
}

/// Per-reason skip totals for a whole generation run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SkipCounts {
    pub out_of_vocabulary: usize,
    pub same_occupation: usize,
    pub is_target: usize,
    pub degenerate: usize,
    pub missing_occupation_vector: usize,
}

impl SkipCounts {
    fn add(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::OutOfVocabulary => self.out_of_vocabulary += 1,
            SkipReason::SameOccupation => self.same_occupation += 1,
            SkipReason::IsTarget => self.is_target += 1,
            SkipReason::Degenerate => self.degenerate += 1,
            SkipReason::MissingOccupationVector => self.missing_occupation_vector += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.out_of_vocabulary
            + self.same_occupation
            + self.is_target
            + self.degenerate
            + self.missing_occupation_vector
    }
}

impl fmt::Display for SkipCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "oov={} same_occupation={} is_target={} degenerate={} missing_occupation_vector={}",
            self.out_of_vocabulary,
            self.same_occupation,
            self.is_target,
            self.degenerate,
            self.missing_occupation_vector
        )
    }
}

/// One generated antonomasia with its provenance fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VaResult {
    pub rank: usize,
    pub sentence: String,
    pub method: Method,
    pub similarity: f64,
    pub l1: f64,
    pub verb: Verb,
    pub modifier_id: EntityId,
    /// Pluralized modifier as rendered into the sentence.
    pub modifier_label: String,
    pub source: CandidateRecord,
    pub target: TargetProfile,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("target {target} has no occupation to take the modifier from")]
    NoOccupation { target: EntityId },
    #[error("the modifier embedding (or the target's own projection/residual) is degenerate")]
    DegenerateModifier,
    #[error("target {key:?} has no embedding in the loaded index")]
    TargetVectorMissing { key: String },
    #[error("modifier {key:?} has no embedding in the loaded index")]
    ModifierVectorMissing { key: String },
    #[error("no viable candidate after filtering and scoring ({counts})")]
    NoViableCandidate { counts: SkipCounts },
    #[error("failed to read candidates file {path}: {detail}")]
    CandidateFile { path: String, detail: String },
    #[error(transparent)]
    Wikidata(#[from] WikidataError),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

impl PipelineError {
    /// Short stable code used in comparison-report cells and diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            PipelineError::NoOccupation { .. } => "NoOccupation",
            PipelineError::DegenerateModifier => "DegenerateModifier",
            PipelineError::TargetVectorMissing { .. } => "TargetVectorMissing",
            PipelineError::ModifierVectorMissing { .. } => "ModifierVectorMissing",
            PipelineError::NoViableCandidate { .. } => "NoViableCandidate",
            PipelineError::CandidateFile { .. } => "CandidateFile",
            PipelineError::Wikidata(e) => match e {
                WikidataError::Network { .. } => "NetworkError",
                WikidataError::Endpoint { .. } => "EndpointError",
                WikidataError::CacheMiss { .. } => "CacheMiss",
                WikidataError::MalformedResponse { .. } => "MalformedResponse",
                WikidataError::EntityNotFound { .. } => "EntityNotFound",
                WikidataError::AmbiguousLabel { .. } => "AmbiguousLabel",
                WikidataError::NoOccupation { .. } => "NoOccupation",
                WikidataError::InvalidInput { .. } | WikidataError::InvalidEndpoint { .. } => {
                    "InvalidInput"
                }
                WikidataError::Io { .. } => "Io",
            },
            PipelineError::Embedding(_) => "Embedding",
            PipelineError::Vector(_) => "Vector",
        }
    }
}

/// The modifier C is the target's first occupation as listed.
pub fn select_modifier(profile: &TargetProfile) -> Result<Occupation, PipelineError> {
    profile
        .occupations
        .first()
        .cloned()
        .ok_or(PipelineError::NoOccupation {
            target: profile.id.clone(),
        })
}

/// Remove candidates that are the target itself and candidates sharing
/// the modifier occupation. With `strict_domain`, any candidate that has
/// the modifier occupation in *any* of its rows is removed entirely, not
/// just the offending rows. Order is preserved.
pub fn filter_candidates(
    candidates: Vec<CandidateRecord>,
    target: &TargetProfile,
    modifier_id: &EntityId,
    strict_domain: bool,
) -> (Vec<CandidateRecord>, FilterStats) {
    let mut stats = FilterStats::default();

    let domain_members: HashSet<EntityId> = if strict_domain {
        candidates
            .iter()
            .filter(|c| c.occupation_id == *modifier_id)
            .map(|c| c.id.clone())
            .collect()
    } else {
        HashSet::new()
    };

    let kept = candidates
        .into_iter()
        .filter(|candidate| {
            if candidate.id == target.id {
                stats.removed_is_target += 1;
                return false;
            }
            if candidate.occupation_id == *modifier_id
                || (strict_domain && domain_members.contains(&candidate.id))
            {
                stats.removed_same_occupation += 1;
                return false;
            }
            true
        })
        .collect();
    (kept, stats)
}

/// Score every candidate against the target under the chosen method.
///
/// Out-of-vocabulary or degenerate candidates are emitted with a skip
/// reason instead of aborting the batch; output order equals input order.
/// The batch itself is unscorable ([`PipelineError::DegenerateModifier`])
/// when the modifier vector, the target's projection, or the target's
/// residual is degenerate.
pub fn score_candidates(
    target_vec: &EmbeddingVector,
    modifier_vec: &EmbeddingVector,
    candidates: Vec<ScoringInput>,
    params: &RankingParams,
) -> Result<Vec<VaCandidateScore>, PipelineError> {
    // Batch-level degeneracy checks: these make every candidate
    // unscorable, so they abort instead of skipping.
    let target_reference = match params.method {
        Method::Projection => {
            let projected = vecops::project_orthogonal(target_vec, modifier_vec)
                .map_err(|_| PipelineError::DegenerateModifier)?;
            if vecops::l2_norm(&projected) <= DEGENERACY_EPSILON {
                return Err(PipelineError::DegenerateModifier);
            }
            Some(projected)
        }
        Method::Translational => {
            let reference = match params.translational_mode {
                TranslationalMode::Residual => vecops::subtract(target_vec, modifier_vec)
                    .map_err(PipelineError::Vector)?,
                TranslationalMode::Plain => target_vec.clone(),
            };
            if vecops::l2_norm(&reference) <= DEGENERACY_EPSILON {
                return Err(PipelineError::DegenerateModifier);
            }
            None
        }
    };

    let mut out = Vec::with_capacity(candidates.len());
    for input in candidates {
        let outcome = score_one(
            target_vec,
            modifier_vec,
            target_reference.as_ref(),
            &input,
            params,
        )?;
        out.push(VaCandidateScore {
            candidate: input.record,
            outcome,
        });
    }
    Ok(out)
}

fn score_one(
    target_vec: &EmbeddingVector,
    modifier_vec: &EmbeddingVector,
    projected_target: Option<&EmbeddingVector>,
    input: &ScoringInput,
    params: &RankingParams,
) -> Result<ScoreOutcome, PipelineError> {
    let Some(candidate_vec) = input.vector.as_ref() else {
        return Ok(ScoreOutcome::Skipped {
            reason: SkipReason::OutOfVocabulary,
        });
    };

    let similarity = match params.method {
        Method::Projection => {
            let projected_target = projected_target.expect("projection precomputes the target");
            let projected = vecops::project_orthogonal(candidate_vec, modifier_vec)
                .map_err(PipelineError::Vector)?;
            match vecops::cosine(&projected, projected_target) {
                Ok(similarity) => similarity,
                Err(VectorError::DegenerateVector) => {
                    return Ok(ScoreOutcome::Skipped {
                        reason: SkipReason::Degenerate,
                    })
                }
                Err(e) => return Err(PipelineError::Vector(e)),
            }
        }
        Method::Translational => {
            let occ = input.occupation_vector.as_ref();
            match vecops::translational_distance(
                target_vec,
                modifier_vec,
                candidate_vec,
                occ,
                params.translational_mode,
            ) {
                Ok(similarity) => similarity,
                Err(VectorError::MissingOccupationVector) => {
                    return Ok(ScoreOutcome::Skipped {
                        reason: SkipReason::MissingOccupationVector,
                    })
                }
                // The target side was checked at batch level, so a
                // degenerate cosine here is the candidate's.
                Err(VectorError::DegenerateVector) => {
                    return Ok(ScoreOutcome::Skipped {
                        reason: SkipReason::Degenerate,
                    })
                }
                Err(e) => return Err(PipelineError::Vector(e)),
            }
        }
    };

    Ok(ScoreOutcome::Scored {
        similarity,
        l1: vecops::l1_norm(candidate_vec),
    })
}

/// Keep the scored entries, order them by similarity (descending, ties
/// broken by ascending candidate id), truncate to `k`, and, when the
/// extremality re-rank is on, stably re-sort those `k` by descending L1.
pub fn rank(scored: Vec<VaCandidateScore>, params: &RankingParams) -> Vec<VaCandidateScore> {
    let mut kept: Vec<VaCandidateScore> = scored
        .into_iter()
        .filter(|entry| entry.scored().is_some())
        .collect();

    kept.sort_by(|a, b| {
        let (sim_a, _) = a.scored().expect("filtered to scored entries");
        let (sim_b, _) = b.scored().expect("filtered to scored entries");
        sim_b
            .total_cmp(&sim_a)
            .then_with(|| a.candidate.id.cmp(&b.candidate.id))
    });
    kept.truncate(params.k.max(1));

    if params.extremal_rerank {
        kept.sort_by(|a, b| {
            let (_, l1_a) = a.scored().expect("filtered to scored entries");
            let (_, l1_b) = b.scored().expect("filtered to scored entries");
            l1_b.total_cmp(&l1_a)
        });
    }
    kept
}

/// Where generation gets its candidate pool from.
#[derive(Debug, Clone)]
pub enum CandidateSource {
    /// A JSON-lines file of [`CandidateRecord`]s (the `fetch-candidates`
    /// output format).
    JsonLines(PathBuf),
    /// Run the extraction query through the client (cache or network).
    Fetch {
        kind: CandidateKind,
        min_sitelinks: u64,
        pages: PageSettings,
    },
}

#[derive(Debug, Clone)]
pub struct GenerateRequest {
    /// Target label or Q-id.
    pub target: String,
    pub params: RankingParams,
    pub strict_domain: bool,
    pub source: CandidateSource,
}

/// Everything about one generation run, for reproducibility.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub method: Method,
    pub translational_mode: TranslationalMode,
    pub k: usize,
    pub extremal_rerank: bool,
    pub strict_domain: bool,
    pub backend: EmbeddingBackend,
    pub endpoint: String,
    pub target_id: EntityId,
    pub modifier_id: EntityId,
    pub modifier_label: String,
    pub candidates_total: usize,
    pub candidates_scored: usize,
    pub filter: FilterStats,
    pub skip_counts: SkipCounts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parse_stats: Option<ParseStats>,
    pub cache_keys: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GenerationReport {
    pub results: Vec<VaResult>,
    pub provenance: Provenance,
}

/// End-to-end generation: profile the target, choose the modifier,
/// gather and filter candidates, look up vectors, score, rank, and
/// render sentences.
pub fn generate(
    request: &GenerateRequest,
    client: &SparqlClient,
    index: &EmbeddingIndex,
) -> Result<GenerationReport, PipelineError> {
    let profile = client.fetch_target_profile(&request.target)?;
    let modifier = select_modifier(&profile)?;

    let (candidates, parse_stats) = match &request.source {
        CandidateSource::JsonLines(path) => (read_candidates_jsonl(path)?, None),
        CandidateSource::Fetch {
            kind,
            min_sitelinks,
            pages,
        } => {
            let batch = client.fetch_candidates(*kind, *min_sitelinks, pages)?;
            (batch.records, Some(batch.stats))
        }
    };
    let candidates_total = candidates.len();

    let (kept, filter_stats) =
        filter_candidates(candidates, &profile, &modifier.id, request.strict_domain);

    let target_vec = entity_vector(index, &profile.id, &profile.label)?.ok_or_else(|| {
        PipelineError::TargetVectorMissing {
            key: vector_key(index, &profile.id, &profile.label),
        }
    })?;
    let modifier_vec = entity_vector(index, &modifier.id, &modifier.label)?.ok_or_else(|| {
        PipelineError::ModifierVectorMissing {
            key: vector_key(index, &modifier.id, &modifier.label),
        }
    })?;

    let inputs: Vec<ScoringInput> = kept
        .into_iter()
        .map(|record| {
            let vector = entity_vector(index, &record.id, &record.label)?;
            let occupation_vector =
                entity_vector(index, &record.occupation_id, &record.occupation_label)?;
            Ok(ScoringInput {
                record,
                vector,
                occupation_vector,
            })
        })
        .collect::<Result<_, PipelineError>>()?;

    let scored = score_candidates(&target_vec, &modifier_vec, inputs, &request.params)?;

    let mut skip_counts = SkipCounts {
        is_target: filter_stats.removed_is_target,
        same_occupation: filter_stats.removed_same_occupation,
        ..SkipCounts::default()
    };
    for entry in &scored {
        if let Some(reason) = entry.skip_reason() {
            skip_counts.add(reason);
        }
    }
    let candidates_scored = scored.iter().filter(|e| e.scored().is_some()).count();

    let ranked = rank(scored, &request.params);
    if ranked.is_empty() {
        return Err(PipelineError::NoViableCandidate {
            counts: skip_counts,
        });
    }

    let verb = select_verb(&profile);
    let modifier_plural = pluralize_modifier(&modifier.label);
    let results = ranked
        .into_iter()
        .enumerate()
        .map(|(i, entry)| {
            let (similarity, l1) = entry.scored().expect("rank emits scored entries only");
            let sentence = render_va(&profile.label, verb, &entry.candidate.label, &modifier_plural);
            VaResult {
                rank: i + 1,
                sentence,
                method: request.params.method,
                similarity,
                l1,
                verb,
                modifier_id: modifier.id.clone(),
                modifier_label: modifier_plural.clone(),
                source: entry.candidate,
                target: profile.clone(),
            }
        })
        .collect();

    Ok(GenerationReport {
        results,
        provenance: Provenance {
            method: request.params.method,
            translational_mode: request.params.translational_mode,
            k: request.params.k,
            extremal_rerank: request.params.extremal_rerank,
            strict_domain: request.strict_domain,
            backend: index.backend(),
            endpoint: client.endpoint().to_owned(),
            target_id: profile.id.clone(),
            modifier_id: modifier.id,
            modifier_label: modifier.label,
            candidates_total,
            candidates_scored,
            filter: filter_stats,
            skip_counts,
            parse_stats,
            cache_keys: client.used_cache_keys(),
        },
    })
}

/// Backend-appropriate vector for an entity: id lookup on the knowledge
/// graph, label composition on the word backend.
fn entity_vector(
    index: &EmbeddingIndex,
    id: &EntityId,
    label: &str,
) -> Result<Option<EmbeddingVector>, PipelineError> {
    match index.backend() {
        EmbeddingBackend::KnowledgeGraph => Ok(index.lookup(id.as_str()).cloned()),
        EmbeddingBackend::Word => Ok(index.label_vector(label)?.vector),
    }
}

fn vector_key(index: &EmbeddingIndex, id: &EntityId, label: &str) -> String {
    match index.backend() {
        EmbeddingBackend::KnowledgeGraph => id.to_string(),
        EmbeddingBackend::Word => label.to_owned(),
    }
}

fn read_candidates_jsonl(path: &PathBuf) -> Result<Vec<CandidateRecord>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::CandidateFile {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CandidateRecord =
            serde_json::from_str(line).map_err(|e| PipelineError::CandidateFile {
                path: path.display().to_string(),
                detail: format!("line {}: {e}", idx + 1),
            })?;
        records.push(record);
    }
    Ok(records)
}
