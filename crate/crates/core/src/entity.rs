//! Core domain types shared across the pipeline: entity identifiers,
//! extracted source candidates, and target profiles.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A Wikidata item or property identifier such as `Q42` or `P106`.
///
/// The value always matches `^[QP][0-9]+$`; construction through
/// [`EntityId::from_str`] (or serde) enforces this. Equality is exact
/// string equality and the ordering is numeric within a prefix, so
/// `Q9 < Q10 < P1`... more precisely `P… < Q…` by prefix byte, then by
/// the numeric value of the digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityId(String);

impl EntityId {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn digits(&self) -> &str {
        &self.0[1..]
    }

    fn is_valid(value: &str) -> bool {
        let mut chars = value.chars();
        matches!(chars.next(), Some('Q') | Some('P'))
            && value.len() > 1
            && chars.all(|c| c.is_ascii_digit())
    }
}

impl FromStr for EntityId {
    type Err = InvalidEntityId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if Self::is_valid(s) {
            Ok(EntityId(s.to_owned()))
        } else {
            Err(InvalidEntityId {
                value: s.to_owned(),
            })
        }
    }
}

impl TryFrom<String> for EntityId {
    type Error = InvalidEntityId;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        if Self::is_valid(&value) {
            Ok(EntityId(value))
        } else {
            Err(InvalidEntityId { value })
        }
    }
}

impl From<EntityId> for String {
    fn from(id: EntityId) -> String {
        id.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Ord for EntityId {
    fn cmp(&self, other: &Self) -> Ordering {
        let prefix = self.0.as_bytes()[0].cmp(&other.0.as_bytes()[0]);
        if prefix != Ordering::Equal {
            return prefix;
        }
        // Canonical ids carry no leading zeros, so comparing digit-string
        // length before the string itself orders them numerically.
        let (a, b) = (self.digits(), other.digits());
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    }
}

impl PartialOrd for EntityId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Error for strings that are not well-formed Wikidata identifiers.
#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid entity id {value:?}: expected Q or P followed by digits")]
pub struct InvalidEntityId {
    pub value: String,
}

/// Which extraction query a candidate came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateKind {
    Fictional,
    Human,
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CandidateKind::Fictional => f.write_str("fictional"),
            CandidateKind::Human => f.write_str("human"),
        }
    }
}

/// One extracted source candidate: an entity paired with one of its
/// occupations and its sitelinks popularity count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: EntityId,
    pub label: String,
    pub occupation_id: EntityId,
    pub occupation_label: String,
    pub sitelinks: u64,
    pub kind: CandidateKind,
}

/// An occupation statement on a target entity, in endpoint order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Occupation {
    pub id: EntityId,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    #[default]
    Unknown,
}

/// The target entity (the A slot): its occupations in the order the
/// endpoint returned them, whether a date-of-death statement exists, and
/// gender when available.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetProfile {
    pub id: EntityId,
    pub label: String,
    pub occupations: Vec<Occupation>,
    pub has_date_of_death: bool,
    #[serde(default)]
    pub gender: Gender,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entity_id_accepts_items_and_properties() {
        assert_eq!("Q42".parse::<EntityId>().unwrap().as_str(), "Q42");
        assert_eq!("P106".parse::<EntityId>().unwrap().as_str(), "P106");
    }

    #[test]
    fn entity_id_rejects_malformed_values() {
        for bad in ["", "Q", "q42", "X7", "Q42b", "42", "Q 42"] {
            assert!(bad.parse::<EntityId>().is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn entity_id_equality_is_exact() {
        let a: EntityId = "Q42".parse().unwrap();
        let b: EntityId = "Q42".parse().unwrap();
        let c: EntityId = "Q420".parse().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn entity_id_orders_numerically_within_prefix() {
        let q9: EntityId = "Q9".parse().unwrap();
        let q10: EntityId = "Q10".parse().unwrap();
        let q100: EntityId = "Q100".parse().unwrap();
        let p1: EntityId = "P1".parse().unwrap();
        assert!(q9 < q10);
        assert!(q10 < q100);
        assert!(p1 < q9);
    }

    #[test]
    fn entity_id_serde_round_trip_validates() {
        let id: EntityId = serde_json::from_str("\"Q15632617\"").unwrap();
        assert_eq!(id.as_str(), "Q15632617");
        assert!(serde_json::from_str::<EntityId>("\"bogus\"").is_err());
        assert_eq!(serde_json::to_string(&id).unwrap(), "\"Q15632617\"");
    }
}
