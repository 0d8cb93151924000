//! Story state, inference sets, verdicts, and telemetry.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::{PairRule, RelationType};
use crate::tag::{find_tags, CharacterTag};
use crate::text::ensure_terminal_punctuation;

/// Single-character or two-character (turn-taking) generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Single,
    Multi,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Single => "single",
            Mode::Multi => "multi",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Mode::Single),
            "multi" => Ok(Mode::Multi),
            other => Err(format!("unknown mode {other:?} (expected single or multi)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SentenceError {
    #[error("sentence text is empty")]
    Empty,
    #[error("subject tag {0} does not occur in the sentence")]
    SubjectNotInText(CharacterTag),
}

/// One sentence of a story. Position 0 is the prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StorySentence {
    text: String,
    subject_tag: Option<CharacterTag>,
    position: usize,
}

impl StorySentence {
    /// Repairs missing terminal punctuation by appending `.`.
    pub fn new(text: &str, subject_tag: Option<CharacterTag>, position: usize) -> Result<Self, SentenceError> {
        let text = ensure_terminal_punctuation(text);
        if text.is_empty() {
            return Err(SentenceError::Empty);
        }
        if let Some(tag) = subject_tag {
            if !find_tags(&text).iter().any(|(_, _, t)| *t == tag) {
                return Err(SentenceError::SubjectNotInText(tag));
            }
        }
        Ok(Self { text, subject_tag, position })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn subject_tag(&self) -> Option<CharacterTag> {
        self.subject_tag
    }

    pub fn position(&self) -> usize {
        self.position
    }
}

/// Per-sentence record of the candidate loop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SentenceTelemetry {
    pub position: usize,
    pub candidates_tried: usize,
    pub relaxation_used: bool,
    /// Rule matches of the accepted candidate.
    pub match_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GenerationTelemetry {
    pub per_sentence: Vec<SentenceTelemetry>,
    pub total_candidates: usize,
}

impl GenerationTelemetry {
    pub fn record(&mut self, entry: SentenceTelemetry) {
        self.total_candidates += entry.candidates_tried;
        self.per_sentence.push(entry);
    }
}

pub type NameMap = BTreeMap<CharacterTag, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryState {
    sentences: Vec<StorySentence>,
    pub mode: Mode,
    pub name_map: NameMap,
    pub telemetry: GenerationTelemetry,
}

impl StoryState {
    pub fn new(prompt: StorySentence, mode: Mode, name_map: NameMap) -> Self {
        let prompt = StorySentence { position: 0, ..prompt };
        Self {
            sentences: vec![prompt],
            mode,
            name_map,
            telemetry: GenerationTelemetry::default(),
        }
    }

    pub fn sentences(&self) -> &[StorySentence] {
        &self.sentences
    }

    pub fn last(&self) -> &StorySentence {
        self.sentences.last().expect("story state always holds the prompt")
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    /// Position the next accepted sentence will take.
    pub fn next_position(&self) -> usize {
        self.sentences.len()
    }

    /// Appends an accepted sentence, renumbering it to keep positions contiguous.
    pub fn push(&mut self, sentence: StorySentence, telemetry: SentenceTelemetry) {
        let position = self.next_position();
        self.sentences.push(StorySentence { position, ..sentence });
        self.telemetry.record(SentenceTelemetry { position, ..telemetry });
    }

    /// The accepted history joined with single spaces.
    pub fn history(&self) -> String {
        self.sentences.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ")
    }

    pub fn subjects(&self) -> Vec<Option<CharacterTag>> {
        self.sentences.iter().map(|s| s.subject_tag).collect()
    }
}

/// Commonsense inferences for one sentence: relation type to a beam of
/// normalized argument phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InferenceSet {
    pub source: String,
    pub beams: BTreeMap<RelationType, Vec<String>>,
    pub beam_width: usize,
}

impl InferenceSet {
    pub fn empty(source: impl Into<String>, beam_width: usize) -> Self {
        Self { source: source.into(), beams: BTreeMap::new(), beam_width }
    }

    /// Empty slice when the relation was not requested or produced nothing.
    pub fn beam(&self, relation: &RelationType) -> &[String] {
        self.beams.get(relation).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.beams.values().flatten().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.beams.values().all(Vec::is_empty)
    }
}

/// Outcome of scoring one chaining rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PairMatchResult {
    pub rule: PairRule,
    pub best_score: f64,
    pub best_pair: Option<(String, String)>,
    pub matched: bool,
}

/// Accept/reject decision for a candidate continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchVerdict {
    pub per_rule: Vec<PairMatchResult>,
    pub match_count: usize,
    pub accepted: bool,
    pub relaxed: bool,
}
