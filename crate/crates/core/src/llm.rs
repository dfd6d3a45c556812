//! The chat-completion baseline: the fixed prompt, an abstract transport
//! with a recorded (fixture) implementation, and a parser that lifts
//! completion lines back into (source, modifier) pairs.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use regex::Regex;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::entity::{Gender, TargetProfile};

/// Environment variable holding the API key for live completions.
pub const LLM_KEY_ENV: &str = "ANTONOMAST_LLM_KEY";

/// The baseline prompt with `{name}` and `{pronoun}` slots. The spelling
/// "Antonomiasias" is intentional: the template is preserved verbatim,
/// typo included, so recorded completions stay comparable.
pub const PROMPT_TEMPLATE: &str = "Provide 10 Vossian Antonomiasias for {name}, where {pronoun} is equated with another person. Each of the phrases should have the structure \"{name} is the [person name] of [profession]\", where [profession] must not characterize [person name]. Provide a very short justification for each example.";

/// A rendered prompt, still carrying the profile it was built for.
#[derive(Debug, Clone, Serialize)]
pub struct ChatPrompt {
    pub text: String,
    pub target: TargetProfile,
}

pub fn pronoun_for(gender: Gender) -> &'static str {
    match gender {
        Gender::Female => "she",
        Gender::Male => "he",
        Gender::Unknown => "he or she",
    }
}

/// Substitute the target's name and pronoun into the template.
pub fn build_va_prompt(profile: &TargetProfile) -> ChatPrompt {
    let text = PROMPT_TEMPLATE
        .replace("{name}", &profile.label)
        .replace("{pronoun}", pronoun_for(profile.gender));
    ChatPrompt {
        text,
        target: profile.clone(),
    }
}

/// Invert [`build_va_prompt`]: mask the name and pronoun slots back to
/// their placeholders. Used to compare rendered prompts against the
/// stored template.
pub fn mask_prompt(text: &str, label: &str) -> String {
    let masked = text.replace(label, "{name}");
    let pronoun = Regex::new(r"\b(he or she|she|he)\b").expect("static regex");
    pronoun.replace(&masked, "{pronoun}").into_owned()
}

/// SHA-256 hex digest of the prompt text; the fixture key.
pub fn prompt_key(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("no recorded completion at {path}")]
    FixtureMiss { path: String },
    #[error("transport error: {detail}")]
    Transport { detail: String },
    #[error("completion response is malformed: {detail}")]
    MalformedCompletion { detail: String },
    #[error("I/O error on {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Minimal HTTP surface the live transport needs; injectable so tests
/// can count (and veto) outbound calls.
pub trait ChatHttp: Send + Sync {
    fn post_json(
        &self,
        endpoint: &str,
        api_key: &str,
        body: &serde_json::Value,
    ) -> Result<serde_json::Value, LlmError>;
}

struct ReqwestChatHttp;

impl ChatHttp for ReqwestChatHttp {
    fn post_json(
        &self,
        endpoint: &str,
        api_key: &str,
        body: &serde_json::Value,
    ) -> Result<serde_json::Value, LlmError> {
        let client = reqwest::blocking::Client::new();
        let response = client
            .post(endpoint)
            .bearer_auth(api_key)
            .json(body)
            .send()
            .map_err(|e| LlmError::Transport {
                detail: e.to_string(),
            })?;
        if !response.status().is_success() {
            return Err(LlmError::Transport {
                detail: format!("HTTP {}", response.status().as_u16()),
            });
        }
        response.json().map_err(|e| LlmError::MalformedCompletion {
            detail: e.to_string(),
        })
    }
}

/// Configuration of a live chat-completion endpoint. A single request is
/// sent per prompt; sampling settings are left at the server default.
#[derive(Clone)]
pub struct LiveConfig {
    pub endpoint: String,
    pub model: String,
    http: Arc<dyn ChatHttp>,
}

impl LiveConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        LiveConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            http: Arc::new(ReqwestChatHttp),
        }
    }

    pub fn with_http(mut self, http: Arc<dyn ChatHttp>) -> Self {
        self.http = http;
        self
    }
}

/// Where completions come from: a fixture directory (replay, no network)
/// or a live endpoint.
pub enum LlmTransport {
    Recorded { fixtures: PathBuf },
    Live(LiveConfig),
}

impl LlmTransport {
    pub fn recorded(fixtures: impl Into<PathBuf>) -> Self {
        LlmTransport::Recorded {
            fixtures: fixtures.into(),
        }
    }
}

/// Fixture path for a prompt: `<fixtures>/<sha256(prompt text)>.txt`.
pub fn fixture_path(fixtures: &Path, prompt_text: &str) -> PathBuf {
    fixtures.join(format!("{}.txt", prompt_key(prompt_text)))
}

/// Store a completion so later recorded runs can replay it.
pub fn store_fixture(fixtures: &Path, prompt_text: &str, completion: &str) -> Result<(), LlmError> {
    std::fs::create_dir_all(fixtures).map_err(|source| LlmError::Io {
        path: fixtures.display().to_string(),
        source,
    })?;
    let path = fixture_path(fixtures, prompt_text);
    std::fs::write(&path, completion).map_err(|source| LlmError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Obtain the raw completion text for a prompt.
///
/// Recorded transports only touch the filesystem; a missing fixture is a
/// [`LlmError::FixtureMiss`]. Live transports require the API key in
/// [`LLM_KEY_ENV`] and fail before any request when it is absent. When
/// `record_dir` is set, the request and response bodies are logged there.
pub fn complete(
    prompt: &ChatPrompt,
    transport: &LlmTransport,
    record_dir: Option<&Path>,
) -> Result<String, LlmError> {
    match transport {
        LlmTransport::Recorded { fixtures } => {
            let path = fixture_path(fixtures, &prompt.text);
            match std::fs::read_to_string(&path) {
                Ok(text) => Ok(text),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(LlmError::FixtureMiss {
                    path: path.display().to_string(),
                }),
                Err(source) => Err(LlmError::Io {
                    path: path.display().to_string(),
                    source,
                }),
            }
        }
        LlmTransport::Live(config) => {
            let api_key = std::env::var(LLM_KEY_ENV).map_err(|_| LlmError::Transport {
                detail: format!("{LLM_KEY_ENV} is not set; refusing to send a request"),
            })?;
            let request = serde_json::json!({
                "model": config.model,
                "messages": [{"role": "user", "content": prompt.text}],
            });
            let response = config.http.post_json(&config.endpoint, &api_key, &request)?;
            let content = response
                .get("choices")
                .and_then(|c| c.get(0))
                .and_then(|c| c.get("message"))
                .and_then(|m| m.get("content"))
                .and_then(|c| c.as_str())
                .ok_or_else(|| LlmError::MalformedCompletion {
                    detail: "missing choices[0].message.content".to_owned(),
                })?
                .to_owned();
            if let Some(dir) = record_dir {
                log_exchange(dir, &prompt.text, &request, &response)?;
            }
            Ok(content)
        }
    }
}

fn log_exchange(
    dir: &Path,
    prompt_text: &str,
    request: &serde_json::Value,
    response: &serde_json::Value,
) -> Result<(), LlmError> {
    std::fs::create_dir_all(dir).map_err(|source| LlmError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    let key = prompt_key(prompt_text);
    for (suffix, value) in [("request", request), ("response", response)] {
        let path = dir.join(format!("{key}.{suffix}.json"));
        let body = serde_json::to_string_pretty(value).expect("json value serializes");
        std::fs::write(&path, body).map_err(|source| LlmError::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// One parsed completion line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParsedVa {
    pub source_label: String,
    pub modifier_label: String,
    pub justification: Option<String>,
}

/// Parsing outcome: extracted entries plus the count of non-empty lines
/// that did not match the expected shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCompletion {
    pub entries: Vec<ParsedVa>,
    pub skipped_lines: usize,
}

/// Extract `<target> (is|was) the <X> of <Y>` lines (case-insensitive),
/// stripping list numbering; text after an em-dash, colon, or
/// sentence-ending period is captured as the justification.
pub fn parse_va_lines(completion: &str, target_label: &str) -> ParsedCompletion {
    let numbering = Regex::new(r"^\s*(?:\d+\s*[.)]\s*)?(?:[-*\u{2022}]\s+)?").expect("static regex");
    let sentence = Regex::new(&format!(
        r"(?i)^{}\s+(?:is|was)\s+the\s+(.+)$",
        regex::escape(target_label)
    ))
    .expect("target label is escaped");

    let mut entries = Vec::new();
    let mut skipped = 0usize;
    for raw_line in completion.lines() {
        let line = raw_line.trim();
        if line.is_empty() {
            continue;
        }
        let line = numbering.replace(line, "");
        let line = line.trim_matches(|c| c == '*' || c == '`').trim();

        let Some(captures) = sentence.captures(line) else {
            skipped += 1;
            continue;
        };
        let tail = captures.get(1).expect("capture group 1").as_str();
        match split_sources(tail) {
            Some(entry) => entries.push(entry),
            None => skipped += 1,
        }
    }
    ParsedCompletion {
        entries,
        skipped_lines: skipped,
    }
}

/// Split `"<X> of <Y>[separator justification]"`. The modifier split uses
/// the *last* " of " so source names containing "of" survive; a period
/// only counts as a separator once an " of " has been seen before it.
fn split_sources(tail: &str) -> Option<ParsedVa> {
    let (mut body, mut justification): (&str, Option<&str>) =
        match tail.find(['\u{2014}', ':']) {
            Some(pos) => {
                let sep_len = tail[pos..].chars().next().expect("separator char").len_utf8();
                (&tail[..pos], Some(&tail[pos + sep_len..]))
            }
            None => (tail, None),
        };

    if justification.is_none() {
        let mut search_from = 0usize;
        while let Some(rel) = body[search_from..].find('.') {
            let pos = search_from + rel;
            if rfind_of(&body[..pos]).is_some() {
                justification = Some(&body[pos + 1..]);
                body = &body[..pos];
                break;
            }
            search_from = pos + 1;
        }
    }

    let of_pos = rfind_of(body)?;
    let source_label = body[..of_pos].trim();
    let modifier_label = body[of_pos + 4..].trim().trim_end_matches('.').trim();
    if source_label.is_empty() || modifier_label.is_empty() {
        return None;
    }
    let justification = justification
        .map(str::trim)
        .filter(|j| !j.is_empty())
        .map(str::to_owned);
    Some(ParsedVa {
        source_label: source_label.to_owned(),
        modifier_label: modifier_label.to_owned(),
        justification,
    })
}

/// Byte index of the last case-insensitive `" of "`. ASCII-only scan,
/// so the index is always a char boundary.
fn rfind_of(body: &str) -> Option<usize> {
    let bytes = body.as_bytes();
    if bytes.len() < 4 {
        return None;
    }
    (0..=bytes.len() - 4).rev().find(|&i| {
        bytes[i] == b' '
            && bytes[i + 1].eq_ignore_ascii_case(&b'o')
            && bytes[i + 2].eq_ignore_ascii_case(&b'f')
            && bytes[i + 3] == b' '
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{Occupation, TargetProfile};

    fn profile(label: &str, gender: Gender) -> TargetProfile {
        TargetProfile {
            id: "Q7251".parse().unwrap(),
            label: label.to_owned(),
            occupations: vec![Occupation {
                id: "Q82594".parse().unwrap(),
                label: "computer scientist".to_owned(),
            }],
            has_date_of_death: true,
            gender,
        }
    }

    #[test]
    fn female_prompt_uses_she() {
        let prompt = build_va_prompt(&profile("Angela Merkel", Gender::Female));
        assert!(prompt.text.contains("for Angela Merkel, where she is equated"));
        assert!(prompt.text.contains("\"Angela Merkel is the [person name] of [profession]\""));
    }

    #[test]
    fn male_prompt_uses_he() {
        let prompt = build_va_prompt(&profile("Alan Turing", Gender::Male));
        assert!(prompt.text.contains("where he is equated with another person"));
    }

    #[test]
    fn unknown_gender_falls_back_to_he_or_she() {
        let prompt = build_va_prompt(&profile("Pat Doe", Gender::Unknown));
        assert!(prompt.text.contains("where he or she is equated"));
    }

    #[test]
    fn masking_recovers_the_template() {
        for gender in [Gender::Female, Gender::Male, Gender::Unknown] {
            let prompt = build_va_prompt(&profile("Grace Hopper", gender));
            assert_eq!(mask_prompt(&prompt.text, "Grace Hopper"), PROMPT_TEMPLATE);
        }
    }

    #[test]
    fn name_appears_once_per_placeholder() {
        let prompt = build_va_prompt(&profile("Alan Turing", Gender::Male));
        let placeholders = PROMPT_TEMPLATE.matches("{name}").count();
        assert_eq!(prompt.text.matches("Alan Turing").count(), placeholders);
    }

    #[test]
    fn recorded_transport_replays_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = build_va_prompt(&profile("Alan Turing", Gender::Male));
        store_fixture(dir.path(), &prompt.text, "1. Alan Turing is the X of y.").unwrap();
        let transport = LlmTransport::recorded(dir.path());
        let text = complete(&prompt, &transport, None).unwrap();
        assert_eq!(text, "1. Alan Turing is the X of y.");
    }

    #[test]
    fn missing_fixture_is_fixture_miss() {
        let dir = tempfile::tempdir().unwrap();
        let prompt = build_va_prompt(&profile("Alan Turing", Gender::Male));
        let transport = LlmTransport::recorded(dir.path());
        assert!(matches!(
            complete(&prompt, &transport, None),
            Err(LlmError::FixtureMiss { .. })
        ));
    }

    #[test]
    fn live_without_key_fails_before_any_request() {
        use std::sync::atomic::{AtomicUsize, Ordering};

        struct CountingHttp(AtomicUsize);
        impl ChatHttp for CountingHttp {
            fn post_json(
                &self,
                _endpoint: &str,
                _api_key: &str,
                _body: &serde_json::Value,
            ) -> Result<serde_json::Value, LlmError> {
                self.0.fetch_add(1, Ordering::SeqCst);
                Ok(serde_json::json!({}))
            }
        }

        let http = Arc::new(CountingHttp(AtomicUsize::new(0)));
        let config = LiveConfig::new("https://example.org/v1/chat/completions", "test-model")
            .with_http(http.clone());
        let prompt = build_va_prompt(&profile("Alan Turing", Gender::Male));
        std::env::remove_var(LLM_KEY_ENV);
        let err = complete(&prompt, &LlmTransport::Live(config), None).unwrap_err();
        assert!(matches!(err, LlmError::Transport { .. }));
        assert_eq!(http.0.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn parses_plain_numbered_line() {
        let parsed = parse_va_lines(
            "1. Alan Turing is the Da Vinci of computer science.",
            "Alan Turing",
        );
        assert_eq!(
            parsed.entries,
            vec![ParsedVa {
                source_label: "Da Vinci".into(),
                modifier_label: "computer science".into(),
                justification: None,
            }]
        );
        assert_eq!(parsed.skipped_lines, 0);
    }

    #[test]
    fn captures_justification_after_separators() {
        let completion = "\
1. Alan Turing is the Da Vinci of computer science — a visionary in his field.
2. Alan Turing was the Mozart of cryptography: composed ciphers like symphonies.
3. Alan Turing is the Houdini of mathematics. He escaped every logical trap.";
        let parsed = parse_va_lines(completion, "Alan Turing");
        assert_eq!(parsed.entries.len(), 3);
        assert_eq!(
            parsed.entries[0].justification.as_deref(),
            Some("a visionary in his field.")
        );
        assert_eq!(
            parsed.entries[1].justification.as_deref(),
            Some("composed ciphers like symphonies.")
        );
        assert_eq!(parsed.entries[1].modifier_label, "cryptography");
        assert_eq!(
            parsed.entries[2].justification.as_deref(),
            Some("He escaped every logical trap.")
        );
    }

    #[test]
    fn sources_containing_of_split_at_last_of() {
        let parsed = parse_va_lines(
            "Alan Turing is the Joan of Arc of computer science.",
            "Alan Turing",
        );
        assert_eq!(parsed.entries[0].source_label, "Joan of Arc");
        assert_eq!(parsed.entries[0].modifier_label, "computer science");
    }

    #[test]
    fn initials_do_not_truncate_the_source() {
        let parsed = parse_va_lines(
            "Alan Turing is the J. R. R. Tolkien of cryptography.",
            "Alan Turing",
        );
        assert_eq!(parsed.entries[0].source_label, "J. R. R. Tolkien");
        assert_eq!(parsed.entries[0].modifier_label, "cryptography");
    }

    #[test]
    fn non_matching_lines_are_counted() {
        let completion = "\
Sure! Here are ten examples:

1. Alan Turing is the Da Vinci of computer science.
2. Somebody Else is the Mozart of chess.";
        let parsed = parse_va_lines(completion, "Alan Turing");
        assert_eq!(parsed.entries.len(), 1);
        assert_eq!(parsed.skipped_lines, 2);
    }

    #[test]
    fn empty_completion_parses_empty() {
        let parsed = parse_va_lines("", "Alan Turing");
        assert!(parsed.entries.is_empty());
        assert_eq!(parsed.skipped_lines, 0);
    }

    #[test]
    fn matching_is_case_insensitive() {
        let parsed = parse_va_lines("ALAN TURING WAS THE ENIGMA OF PUZZLES", "Alan Turing");
        assert_eq!(parsed.entries[0].source_label, "ENIGMA");
        assert_eq!(parsed.entries[0].modifier_label, "PUZZLES");
    }
}
