//! Shared fixtures and the independent brute-force oracle used by the
//! integration and acceptance suites.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::Arc;

use antonomast::embedding::{EmbeddingBackend, EmbeddingIndex};
use antonomast::entity::{CandidateRecord, EntityId, Gender, Occupation, TargetProfile};
use antonomast::pipeline::ScoringInput;
use antonomast::wikidata::results::ResultsDocument;
use antonomast::wikidata::{
    queries, CachePolicy, OfflineTransport, QueryCache, SparqlClient, SparqlTransport,
};

pub fn data_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name))
        .unwrap_or_else(|e| panic!("fixture {name} unreadable: {e}"))
}

pub fn fixture_candidates_doc() -> ResultsDocument {
    let raw = std::fs::read(data_path("candidates_human.json")).expect("candidates fixture");
    ResultsDocument::parse(raw, "fixture".into()).expect("fixture parses")
}

pub fn fixture_index() -> EmbeddingIndex {
    EmbeddingIndex::load_text(
        data_path("embeddings_kg_8d.txt"),
        EmbeddingBackend::KnowledgeGraph,
    )
    .expect("embeddings fixture loads")
}

pub fn occupation(id: &str, label: &str) -> Occupation {
    Occupation {
        id: id.parse().unwrap(),
        label: label.to_owned(),
    }
}

pub fn turing_profile() -> TargetProfile {
    TargetProfile {
        id: "Q7251".parse().unwrap(),
        label: "Alan Turing".to_owned(),
        occupations: vec![
            occupation("Q82594", "computer scientist"),
            occupation("Q170790", "mathematician"),
        ],
        has_date_of_death: true,
        gender: Gender::Male,
    }
}

pub fn merkel_profile() -> TargetProfile {
    TargetProfile {
        id: "Q567".parse().unwrap(),
        label: "Angela Merkel".to_owned(),
        occupations: vec![occupation("Q82955", "politician")],
        has_date_of_death: false,
        gender: Gender::Female,
    }
}

pub fn mercury_profile() -> TargetProfile {
    TargetProfile {
        id: "Q15869".parse().unwrap(),
        label: "Freddie Mercury".to_owned(),
        occupations: vec![occupation("Q488205", "singer-songwriter")],
        has_date_of_death: true,
        gender: Gender::Male,
    }
}

/// Assemble scoring inputs the same way generation does on the
/// knowledge-graph backend: id lookups for candidate and occupation.
pub fn scoring_inputs(records: &[CandidateRecord], index: &EmbeddingIndex) -> Vec<ScoringInput> {
    records
        .iter()
        .map(|record| ScoringInput {
            record: record.clone(),
            vector: index.lookup(record.id.as_str()).cloned(),
            occupation_vector: index.lookup(record.occupation_id.as_str()).cloned(),
        })
        .collect()
}

/// Write a SPARQL-Results body into `cache_dir` under the key of `query`.
pub fn store_fixture(cache_dir: &Path, query: &str, body: &[u8]) {
    QueryCache::new(cache_dir, CachePolicy::ReadWrite)
        .store(query, body)
        .expect("fixture stores");
}

fn results_body(rows: &[serde_json::Value]) -> Vec<u8> {
    serde_json::to_vec(&serde_json::json!({
        "head": {"vars": []},
        "results": {"bindings": rows}
    }))
    .expect("body serializes")
}

fn uri(id: &str) -> serde_json::Value {
    serde_json::json!({"type": "uri", "value": format!("http://www.wikidata.org/entity/{id}")})
}

fn literal(value: &str) -> serde_json::Value {
    serde_json::json!({"type": "literal", "value": value})
}

/// Cache the profile query response that reconstructs `profile`.
pub fn store_profile_fixture(cache_dir: &Path, profile: &TargetProfile) {
    let gender_id = match profile.gender {
        Gender::Male => Some("Q6581097"),
        Gender::Female => Some("Q6581072"),
        Gender::Unknown => None,
    };
    let rows: Vec<serde_json::Value> = profile
        .occupations
        .iter()
        .map(|occ| {
            let mut row = serde_json::json!({
                "itemLabel": literal(&profile.label),
                "occupation": uri(occ.id.as_str()),
                "occupationLabel": literal(&occ.label),
            });
            if profile.has_date_of_death {
                row["dateOfDeath"] = literal("1954-06-07T00:00:00Z");
            }
            if let Some(gender) = gender_id {
                row["gender"] = uri(gender);
            }
            row
        })
        .collect();
    store_fixture(
        cache_dir,
        &queries::target_profile_query(&profile.id),
        &results_body(&rows),
    );
}

/// Cache a label-resolution response mapping `label` to `id`.
pub fn store_label_fixture(cache_dir: &Path, label: &str, id: &EntityId, sitelinks: u64) {
    let row = serde_json::json!({
        "item": uri(id.as_str()),
        "sitelinks": literal(&sitelinks.to_string()),
    });
    store_fixture(
        cache_dir,
        &queries::label_resolution_query(label),
        &results_body(&[row]),
    );
}

/// Cache the first candidates page (human query, threshold 70) from the
/// committed fixture document.
pub fn store_candidates_fixture(cache_dir: &Path) {
    let base = queries::build_human_candidates_query(70);
    let query = queries::with_page(&base, 5_000, 0);
    let raw = std::fs::read(data_path("candidates_human.json")).expect("candidates fixture");
    store_fixture(cache_dir, &query, &raw);
}

/// Offline client over a warm cache; the returned transport counts any
/// (forbidden) network attempt.
pub fn offline_client(cache_dir: &Path) -> (SparqlClient, Arc<OfflineTransport>) {
    let transport = Arc::new(OfflineTransport::new());
    let client = SparqlClient::new(
        "https://example.org/sparql",
        QueryCache::new(cache_dir, CachePolicy::ReadOnly),
        transport.clone() as Arc<dyn SparqlTransport>,
    )
    .expect("client builds");
    (client, transport)
}

pub mod oracle {
    //! Direct per-candidate evaluation of the scoring formulas plus an
    //! explicit sort: the reference the pipeline is checked against.
    //! Deliberately independent of the library's vector kernel.

    use antonomast::entity::EntityId;

    const EPS: f64 = 1e-12;

    #[derive(Debug, Clone, Copy, PartialEq, Eq)]
    pub enum OracleMethod {
        Projection,
        TranslationalResidual,
        TranslationalPlain,
    }

    /// One candidate as raw numbers: id, its vector, its occupation's
    /// vector (both optional, mirroring vocabulary coverage).
    pub struct OracleCandidate {
        pub id: EntityId,
        pub vector: Option<Vec<f64>>,
        pub occupation_vector: Option<Vec<f64>>,
    }

    fn dot(x: &[f64], y: &[f64]) -> f64 {
        let mut sum = 0.0;
        for i in 0..x.len() {
            sum += x[i] * y[i];
        }
        sum
    }

    fn norm(x: &[f64]) -> f64 {
        dot(x, x).sqrt()
    }

    fn l1(x: &[f64]) -> f64 {
        let mut sum = 0.0;
        for v in x {
            sum += v.abs();
        }
        sum
    }

    fn project_away(x: &[f64], c: &[f64]) -> Vec<f64> {
        let coeff = dot(x, c) / dot(c, c);
        let mut out = Vec::with_capacity(x.len());
        for i in 0..x.len() {
            out.push(x[i] - coeff * c[i]);
        }
        out
    }

    fn cosine(x: &[f64], y: &[f64]) -> Option<f64> {
        let nx = norm(x);
        let ny = norm(y);
        if nx <= EPS || ny <= EPS {
            return None;
        }
        Some((dot(x, y) / (nx * ny)).clamp(-1.0, 1.0))
    }

    fn subtract(x: &[f64], y: &[f64]) -> Vec<f64> {
        x.iter().zip(y).map(|(a, b)| a - b).collect()
    }

    /// Full ranked id sequence for the given formula, top-k size, and
    /// re-rank switch.
    pub fn rank_ids(
        target: &[f64],
        modifier: &[f64],
        candidates: &[OracleCandidate],
        method: OracleMethod,
        k: usize,
        extremal_rerank: bool,
    ) -> Vec<EntityId> {
        let projected_target = project_away(target, modifier);
        let target_residual = subtract(target, modifier);

        let mut scored: Vec<(EntityId, f64, f64)> = Vec::new();
        for candidate in candidates {
            let Some(vector) = candidate.vector.as_ref() else {
                continue;
            };
            let similarity = match method {
                OracleMethod::Projection => {
                    cosine(&project_away(vector, modifier), &projected_target)
                }
                OracleMethod::TranslationalResidual => {
                    match candidate.occupation_vector.as_ref() {
                        Some(occupation) => {
                            cosine(&subtract(vector, occupation), &target_residual)
                        }
                        None => None,
                    }
                }
                OracleMethod::TranslationalPlain => cosine(vector, target),
            };
            if let Some(similarity) = similarity {
                scored.push((candidate.id.clone(), similarity, l1(vector)));
            }
        }

        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        if extremal_rerank {
            scored.sort_by(|a, b| b.2.total_cmp(&a.2));
        }
        scored.into_iter().map(|(id, _, _)| id).collect()
    }
}
