//! Builders for the fixed SPARQL query shapes the pipeline needs.
//!
//! All builders are pure: equal inputs yield byte-identical query text.
//! The two candidate-extraction queries are kept close to their canonical
//! multi-line layout (golden-file tests compare them after whitespace
//! normalization); the lookup queries for targets are plainer.

use crate::entity::EntityId;

/// Candidates that are fictional characters: instances of Q15632617 with
/// an occupation, kept only above the sitelinks threshold (strict `<`).
pub fn build_fictional_candidates_query(min_sitelinks: u64) -> String {
    format!(
        "\
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX wd: <http://www.wikidata.org/entity/>
SELECT DISTINCT ?item ?itemLabel ?occupation ?sitelinks WHERE {{
    ?item wdt:P31 wd:Q15632617; #fictional characters
    wdt:P106 ?occupation;
    wikibase:sitelinks ?sitelinks .
    FILTER({min_sitelinks} < ?sitelinks).
    SERVICE wikibase:label {{bd:serviceParam
        wikibase:language \"[AUTO_LANGUAGE],en\".}}}}
"
    )
}

/// Candidates that are real-world individuals: humans (Q5) with an
/// occupation, restricted by a six-branch UNION to the sports /
/// computer-science / mathematics / politics / entrepreneurship /
/// instrument / genre domains, kept at or above the sitelinks threshold
/// (inclusive `<=`).
pub fn build_human_candidates_query(min_sitelinks: u64) -> String {
    format!(
        "\
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX wd: <http://www.wikidata.org/entity/>
SELECT DISTINCT ?item ?itemLabel ?occupation ?sitelinks WHERE {{
    ?item wdt:P31 wd:Q5;
        wdt:P106 ?occupation;
        wikibase:sitelinks ?sitelinks.
    {{?item wdt:P641 ?sport.}} #people who do sports
UNION {{?item wdt:P106 wd:Q82594.}} #computer scientists
UNION {{?item wdt:P106 wd:Q170790.}} #mathematicians
UNION {{?item wdt:P106 wd:Q82955.}} #politicians
UNION {{?item wdt:P106 wd:Q131524.}} #entrepreneurs
UNION {{?item wdt:P1303 ?instrument.}} #people who play an instrument
UNION {{?item wdt:P136 ?genre.}} #people who have a genre
FILTER({min_sitelinks} <= ?sitelinks).
SERVICE wikibase:label{{ bd:serviceParam
    wikibase:language \"[AUTO_LANGUAGE],en\". }}
}}
"
    )
}

/// Append a LIMIT/OFFSET window to a candidate query. Large extractions
/// are paged to stay inside public-endpoint timeouts.
pub fn with_page(query: &str, limit: u64, offset: u64) -> String {
    format!("{}LIMIT {limit}\nOFFSET {offset}\n", query)
}

/// Resolve an English label or alias to entity ids, with the sitelinks
/// count for popularity tie-breaking.
pub fn label_resolution_query(label: &str) -> String {
    let literal = escape_literal(label);
    format!(
        "\
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
PREFIX skos: <http://www.w3.org/2004/02/skos/core#>
PREFIX wikibase: <http://wikiba.se/ontology#>
SELECT DISTINCT ?item ?sitelinks WHERE {{
    {{ ?item rdfs:label \"{literal}\"@en. }} UNION {{ ?item skos:altLabel \"{literal}\"@en. }}
    ?item wikibase:sitelinks ?sitelinks.
}}
ORDER BY DESC(?sitelinks) ?item
LIMIT 50
"
    )
}

/// Everything the pipeline needs to know about one target: label,
/// occupations (P106, in endpoint order), date-of-death presence (P570),
/// and gender (P21).
pub fn target_profile_query(id: &EntityId) -> String {
    format!(
        "\
PREFIX wd: <http://www.wikidata.org/entity/>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
PREFIX wikibase: <http://wikiba.se/ontology#>
PREFIX bd: <http://www.bigdata.com/rdf#>
SELECT ?itemLabel ?occupation ?occupationLabel ?dateOfDeath ?gender WHERE {{
    wd:{id} wikibase:sitelinks ?sitelinks.
    OPTIONAL {{ wd:{id} wdt:P106 ?occupation. }}
    OPTIONAL {{ wd:{id} wdt:P570 ?dateOfDeath. }}
    OPTIONAL {{ wd:{id} wdt:P21 ?gender. }}
    SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"en\". }}
}}
"
    )
}

/// Collapse every whitespace run to a single space and trim. Used both
/// for cache keys and for layout-insensitive query comparison.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out
}
