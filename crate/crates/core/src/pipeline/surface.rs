//! Surface realization: verb tense, modifier pluralization, and the
//! sentence template `{A} {verb} the {B} of {C}`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::entity::TargetProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Is,
    Was,
}

impl fmt::Display for Verb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verb::Is => f.write_str("is"),
            Verb::Was => f.write_str("was"),
        }
    }
}

/// Past tense for deceased targets (a date-of-death statement exists),
/// present tense otherwise.
pub fn select_verb(profile: &TargetProfile) -> Verb {
    if profile.has_date_of_death {
        Verb::Was
    } else {
        Verb::Is
    }
}

/// Irregular plural forms checked before the suffix rules. Keys are
/// lowercase final words.
const IRREGULAR_PLURALS: &[(&str, &str)] = &[
    ("person", "people"),
    ("man", "men"),
    ("woman", "women"),
    ("child", "children"),
    ("businessman", "businessmen"),
    ("businesswoman", "businesswomen"),
    ("chairman", "chairmen"),
    ("clergyman", "clergymen"),
    ("craftsman", "craftsmen"),
    ("fireman", "firemen"),
    ("hero", "heroes"),
    ("policeman", "policemen"),
    ("policewoman", "policewomen"),
    ("salesman", "salesmen"),
    ("spokesman", "spokesmen"),
    ("sportsman", "sportsmen"),
    ("sportswoman", "sportswomen"),
    ("statesman", "statesmen"),
];

/// Pluralize an occupation label for the "of C" slot. Only the final
/// whitespace-delimited word changes: exception table first, then
/// `-s/-x/-z/-ch/-sh → +es`, then consonant-`y` → `ies`, else `+s`.
pub fn pluralize_modifier(label: &str) -> String {
    let trimmed = label.trim();
    let (head, last) = match trimmed.rsplit_once(char::is_whitespace) {
        Some((head, last)) => (Some(head), last),
        None => (None, trimmed),
    };
    let plural_last = pluralize_word(last);
    match head {
        Some(head) => format!("{head} {plural_last}"),
        None => plural_last,
    }
}

fn pluralize_word(word: &str) -> String {
    let lowered = word.to_lowercase();
    if let Some((_, plural)) = IRREGULAR_PLURALS.iter().find(|(s, _)| *s == lowered) {
        return (*plural).to_owned();
    }
    if lowered.ends_with('s')
        || lowered.ends_with('x')
        || lowered.ends_with('z')
        || lowered.ends_with("ch")
        || lowered.ends_with("sh")
    {
        return format!("{word}es");
    }
    if lowered.ends_with('y') {
        let stem_end = lowered.len() - 1;
        let penultimate = lowered[..stem_end].chars().last();
        if matches!(penultimate, Some(c) if c.is_ascii_alphabetic() && !"aeiou".contains(c)) {
            return format!("{}ies", &word[..word.len() - 1]);
        }
    }
    format!("{word}s")
}

/// Compose the final assertion: `<A> <verb> the <B> of <C>` with single
/// spaces and no added punctuation.
pub fn render_va(target_label: &str, verb: Verb, source_label: &str, modifier_plural: &str) -> String {
    format!("{target_label} {verb} the {source_label} of {modifier_plural}")
}
