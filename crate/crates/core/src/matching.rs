//! Chaining verdicts: does a candidate's precondition inferences follow from
//! the previous sentence's postcondition inferences?

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{BackendError, EmbeddingVector, Encoder};
use crate::config::GenerationConfig;
use crate::relation::{rules_for, PairRule};
use crate::story::{InferenceSet, Mode};

pub use crate::story::{MatchVerdict, PairMatchResult};

/// Score reported for a rule with an empty beam on either side.
pub const EMPTY_BEAM_SCORE: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Lowercase, trim, collapse whitespace. `None` for empty, `none`, or
/// punctuation-only input.
pub fn normalize_phrase(raw: &str) -> Option<String> {
    let phrase = raw.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    if phrase.is_empty() || phrase == "none" || !phrase.chars().any(char::is_alphanumeric) {
        return None;
    }
    Some(phrase)
}

/// Dot product of two unit vectors, clamped to [-1, 1].
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, MatchError> {
    if a.dim() != b.dim() {
        return Err(MatchError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let dot: f64 = a.components().iter().zip(b.components()).map(|(x, y)| x * y).sum();
    Ok(dot.clamp(-1.0, 1.0))
}

/// Encodes each distinct phrase once.
struct EmbeddingMemo<'e> {
    encoder: &'e dyn Encoder,
    cache: HashMap<String, EmbeddingVector>,
}

impl<'e> EmbeddingMemo<'e> {
    fn new(encoder: &'e dyn Encoder) -> Self {
        Self { encoder, cache: HashMap::new() }
    }

    fn get(&mut self, phrase: &str) -> Result<&EmbeddingVector, MatchError> {
        if !self.cache.contains_key(phrase) {
            let v = self.encoder.encode(phrase)?;
            self.cache.insert(phrase.to_string(), v);
        }
        Ok(&self.cache[phrase])
    }
}

fn dedup(beam: &[String]) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::with_capacity(beam.len());
    for p in beam {
        if !out.contains(&p.as_str()) {
            out.push(p);
        }
    }
    out
}

fn score_rule(
    context: &InferenceSet,
    continuation: &InferenceSet,
    rule: &PairRule,
    threshold: f64,
    memo: &mut EmbeddingMemo<'_>,
) -> Result<PairMatchResult, MatchError> {
    let left = dedup(context.beam(&rule.context_relation));
    let right = dedup(continuation.beam(&rule.continuation_relation));
    if left.is_empty() || right.is_empty() {
        return Ok(PairMatchResult { rule: rule.clone(), best_score: EMPTY_BEAM_SCORE, best_pair: None, matched: false });
    }
    let mut best: Option<(f64, &str, &str)> = None;
    for l in &left {
        let lv = memo.get(l)?.clone();
        for r in &right {
            let score = cosine_similarity(&lv, memo.get(r)?)?;
            if best.is_none_or(|(s, _, _)| score > s) {
                best = Some((score, l, r));
            }
        }
    }
    let (score, l, r) = best.expect("both beams non-empty");
    Ok(PairMatchResult {
        rule: rule.clone(),
        best_score: score,
        best_pair: Some((l.to_string(), r.to_string())),
        matched: score >= threshold,
    })
}

/// Max cosine over the cross product of the rule's two beams.
pub fn pair_match(
    context: &InferenceSet,
    continuation: &InferenceSet,
    rule: &PairRule,
    threshold: f64,
    encoder: &dyn Encoder,
) -> Result<PairMatchResult, MatchError> {
    score_rule(context, continuation, rule, threshold, &mut EmbeddingMemo::new(encoder))
}

/// Scores every rule of `mode` and counts matches against the strict or
/// relaxed requirement.
pub fn evaluate_candidate(
    previous: &InferenceSet,
    candidate: &InferenceSet,
    mode: Mode,
    cfg: &GenerationConfig,
    relaxed: bool,
    encoder: &dyn Encoder,
) -> Result<MatchVerdict, MatchError> {
    let mut memo = EmbeddingMemo::new(encoder);
    let per_rule = rules_for(mode)
        .iter()
        .map(|rule| score_rule(previous, candidate, rule, cfg.similarity_threshold, &mut memo))
        .collect::<Result<Vec<_>, _>>()?;
    let match_count = per_rule.iter().filter(|r| r.matched).count();
    Ok(MatchVerdict { per_rule, match_count, accepted: match_count >= cfg.threshold_for(mode, relaxed), relaxed })
}

/// A stored verdict case: two inference sets and the expected match count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerdictFixture {
    pub mode: Mode,
    pub previous: InferenceSet,
    pub candidate: InferenceSet,
    pub expected_match_count: usize,
}
