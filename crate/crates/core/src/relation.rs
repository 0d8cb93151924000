//! Commonsense relation types and the chaining rules between them.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::story::Mode;

/// Whose perspective a relation describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationScope {
    /// `x`-prefixed: the sentence's subject.
    #[serde(rename = "self")]
    Subject,
    /// `o`-prefixed: other participants.
    Other,
    /// Event-level relations such as `CausesDesire`.
    Event,
}

/// The relation types the matcher uses.
pub const IN_SCOPE_RELATIONS: [&str; 11] = [
    "xWant",
    "xIntent",
    "xNeed",
    "xEffect",
    "xAttr",
    "xReact",
    "oReact",
    "oWant",
    "oEffect",
    "CausesDesire",
    "Desires",
];

/// A named relation type such as `xWant`.
///
/// Scope and in-scope membership are derived from the name.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationType(String);

impl RelationType {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn scope(&self) -> RelationScope {
        let mut chars = self.0.chars();
        match (chars.next(), chars.next()) {
            (Some('x'), Some(c)) if c.is_ascii_uppercase() => RelationScope::Subject,
            (Some('o'), Some(c)) if c.is_ascii_uppercase() => RelationScope::Other,
            _ => RelationScope::Event,
        }
    }

    pub fn in_scope(&self) -> bool {
        IN_SCOPE_RELATIONS.contains(&self.0.as_str())
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RelationType {
    fn from(name: &str) -> Self {
        Self::new(name)
    }
}

/// The extended relation inventory used for mining.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInventory {
    relations: Vec<RelationType>,
}

const BUILTIN_INVENTORY: &str = include_str!("../data/relations.txt");

impl RelationInventory {
    /// Parses one relation name per line; `#` starts a comment line.
    /// Duplicates are dropped, first occurrence wins.
    pub fn parse(text: &str) -> Self {
        let mut relations: Vec<RelationType> = Vec::new();
        for line in text.lines() {
            let name = line.trim();
            if name.is_empty() || name.starts_with('#') {
                continue;
            }
            let rel = RelationType::new(name);
            if !relations.contains(&rel) {
                relations.push(rel);
            }
        }
        Self { relations }
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_INVENTORY)
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    /// Only the 11 matcher relations.
    pub fn in_scope() -> Self {
        Self {
            relations: IN_SCOPE_RELATIONS.iter().map(|n| RelationType::new(*n)).collect(),
        }
    }

    pub fn relations(&self) -> &[RelationType] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }
}

impl FromIterator<RelationType> for RelationInventory {
    fn from_iter<I: IntoIterator<Item = RelationType>>(iter: I) -> Self {
        let mut relations = Vec::new();
        for rel in iter {
            if !relations.contains(&rel) {
                relations.push(rel);
            }
        }
        Self { relations }
    }
}

/// One chaining rule: a postcondition of the prior sentence that should
/// reappear as a precondition of the continuation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairRule {
    pub context_relation: RelationType,
    pub continuation_relation: RelationType,
    pub mode: Mode,
}

impl PairRule {
    pub fn new(context: &str, continuation: &str, mode: Mode) -> Self {
        Self {
            context_relation: RelationType::new(context),
            continuation_relation: RelationType::new(continuation),
            mode,
        }
    }
}

impl fmt::Display for PairRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.context_relation, self.continuation_relation)
    }
}

/// The eight default rules: five single-character, three multi-character.
pub fn default_rules() -> Vec<PairRule> {
    vec![
        PairRule::new("xWant", "xIntent", Mode::Single),
        PairRule::new("xReact", "xReact", Mode::Single),
        PairRule::new("xEffect", "xEffect", Mode::Single),
        PairRule::new("xReact", "xAttr", Mode::Single),
        PairRule::new("CausesDesire", "Desires", Mode::Single),
        PairRule::new("oReact", "xAttr", Mode::Multi),
        PairRule::new("oWant", "xIntent", Mode::Multi),
        PairRule::new("oEffect", "xEffect", Mode::Multi),
    ]
}

pub fn rules_for(mode: Mode) -> Vec<PairRule> {
    default_rules().into_iter().filter(|r| r.mode == mode).collect()
}

/// Union of context and continuation relations referenced by `mode`'s
/// rules, in first-seen order.
pub fn relations_for(mode: Mode) -> Vec<RelationType> {
    let mut out: Vec<RelationType> = Vec::new();
    for rule in rules_for(mode) {
        for rel in [rule.context_relation, rule.continuation_relation] {
            if !out.contains(&rel) {
                out.push(rel);
            }
        }
    }
    out
}
