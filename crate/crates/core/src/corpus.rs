//! Corpus tooling: name-to-tag preprocessing, prefix-conditioned training
//! pairs, relation-pair mining, and reward labels for fine-tuning.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{format_prompt, BackendError, Backends, CommonsenseModel, EmbeddingVector, Encoder, EntityRecognizer, SubjectParser};
use crate::config::GenerationConfig;
use crate::matching::{cosine_similarity, evaluate_candidate, MatchError};
use crate::relation::{relations_for, RelationType};
use crate::story::{InferenceSet, Mode, NameMap};
use crate::tag::{find_tags, CharacterTag};

/// Matches needed for a pair to be labeled coherent.
pub const COHERENT_MATCHES: usize = 3;

/// Per-iteration decay of the penalty weight.
pub const PENALTY_DECAY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("corpus is empty")]
    Empty,
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Match(#[from] MatchError),
}

/// One story per line, sentences separated by tabs. Blank lines are
/// skipped; `line` numbers in errors are 1-based.
pub fn parse_corpus(text: &str) -> Result<Vec<Vec<String>>, CorpusError> {
    let mut stories = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
        if let Some(k) = fields.iter().position(|f| f.trim().is_empty()) {
            return Err(CorpusError::Format { line: i + 1, message: format!("sentence {} is empty", k + 1) });
        }
        stories.push(fields.into_iter().map(|f| f.trim().to_string()).collect());
    }
    Ok(stories)
}

/// Sentence pairs, one per line as `first<TAB>second`.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CorpusError> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match line.split('\t').map(str::trim).collect::<Vec<_>>().as_slice() {
            [a, b] if !a.is_empty() && !b.is_empty() => pairs.push((a.to_string(), b.to_string())),
            fields => {
                return Err(CorpusError::Format {
                    line: i + 1,
                    message: format!("expected two non-empty tab-separated sentences, found {} fields", fields.len()),
                })
            }
        }
    }
    Ok(pairs)
}

/// Replaces character mentions with `[Char_n]` tags numbered by first
/// appearance. Existing tags are kept and new numbers start after them.
pub fn preprocess_names(story: &[String], recognizer: &dyn EntityRecognizer) -> (Vec<String>, NameMap) {
    let mut next = story.iter().flat_map(|s| find_tags(s)).map(|(_, _, t)| t.index()).max().unwrap_or(0) + 1;
    let mut assigned: HashMap<String, CharacterTag> = HashMap::new();
    let mut names = NameMap::new();
    let tagged = story
        .iter()
        .map(|sentence| {
            let mut out = String::with_capacity(sentence.len());
            let mut last = 0;
            for m in recognizer.mentions(sentence) {
                let tag = *assigned.entry(m.text.clone()).or_insert_with(|| {
                    let tag = CharacterTag::of(next);
                    next += 1;
                    names.insert(tag, m.text.clone());
                    tag
                });
                out.push_str(&sentence[last..m.start]);
                out.push_str(&tag.render());
                last = m.end;
            }
            out.push_str(&sentence[last..]);
            out
        })
        .collect();
    (tagged, names)
}

/// A prefix-conditioned fine-tuning example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingPair {
    /// `* [Char_n] * ` followed by the story so far.
    pub input: String,
    pub target: String,
    pub subject: CharacterTag,
}

/// One pair per sentence after the first whose subject parses; the input
/// is the preceding history prefixed with that subject.
pub fn build_prefix_training_pairs(story: &[String], parser: &dyn SubjectParser) -> Vec<TrainingPair> {
    (1..story.len())
        .filter_map(|i| {
            let subject = parser.subject_of(&story[i])?;
            Some(TrainingPair {
                input: format_prompt(Some(subject), &story[..i].join(" ")),
                target: story[i].clone(),
                subject,
            })
        })
        .collect()
}

/// Aggregate similarity between one relation of a sentence and another
/// relation of the next sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinedPairStat {
    pub context_relation: RelationType,
    pub continuation_relation: RelationType,
    pub sample_count: usize,
    pub mean_max_similarity: f64,
    pub match_rate: f64,
    /// `mean_max_similarity >= threshold`.
    pub rule_candidate: bool,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    count: usize,
    sum: f64,
    hits: usize,
}

/// Distinct phrases of one sentence with their embeddings, and each
/// relation's beam as indices into them.
struct Embedded {
    vectors: Vec<EmbeddingVector>,
    beams: Vec<Vec<usize>>,
}

fn embed(set: &InferenceSet, relations: &[RelationType], encoder: &dyn Encoder) -> Result<Embedded, CorpusError> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut vectors = Vec::new();
    let mut beams = Vec::with_capacity(relations.len());
    for rel in relations {
        let mut beam = Vec::new();
        for phrase in set.beam(rel) {
            let id = match index.get(phrase.as_str()) {
                Some(id) => *id,
                None => {
                    vectors.push(encoder.encode(phrase)?);
                    index.insert(phrase, vectors.len() - 1);
                    vectors.len() - 1
                }
            };
            if !beam.contains(&id) {
                beam.push(id);
            }
        }
        beams.push(beam);
    }
    Ok(Embedded { vectors, beams })
}

fn tally_story(
    story: &[String],
    commonsense: &dyn CommonsenseModel,
    encoder: &dyn Encoder,
    relations: &[RelationType],
    threshold: f64,
    beam_width: usize,
) -> Result<Vec<Tally>, CorpusError> {
    let n = relations.len();
    let mut tallies = vec![Tally::default(); n * n];
    let embedded = story
        .iter()
        .map(|s| embed(&commonsense.infer(s, relations, beam_width)?, relations, encoder))
        .collect::<Result<Vec<_>, _>>()?;
    for pair in embedded.windows(2) {
        let (ctx, next) = (&pair[0], &pair[1]);
        let mut sims = vec![0.0; ctx.vectors.len() * next.vectors.len()];
        for (i, a) in ctx.vectors.iter().enumerate() {
            for (j, b) in next.vectors.iter().enumerate() {
                sims[i * next.vectors.len() + j] = cosine_similarity(a, b)?;
            }
        }
        for (a, left) in ctx.beams.iter().enumerate() {
            if left.is_empty() {
                continue;
            }
            for (b, right) in next.beams.iter().enumerate() {
                if right.is_empty() {
                    continue;
                }
                let best = left
                    .iter()
                    .flat_map(|i| right.iter().map(move |j| (*i, *j)))
                    .map(|(i, j)| sims[i * next.vectors.len() + j])
                    .fold(f64::NEG_INFINITY, f64::max);
                let t = &mut tallies[a * n + b];
                t.count += 1;
                t.sum += best;
                t.hits += usize::from(best >= threshold);
            }
        }
    }
    Ok(tallies)
}

/// Scores every ordered relation pair, self pairs included, over all
/// adjacent sentence pairs of `stories`. Pairs never observed with both
/// beams non-empty are omitted. Sorted by match rate, then mean
/// similarity, descending.
pub fn mine_pair_rules(
    stories: &[Vec<String>],
    commonsense: &dyn CommonsenseModel,
    encoder: &dyn Encoder,
    relations: &[RelationType],
    threshold: f64,
    beam_width: usize,
) -> Result<Vec<MinedPairStat>, CorpusError> {
    if stories.is_empty() {
        return Err(CorpusError::Empty);
    }
    let n = relations.len();
    let per_story = stories
        .par_iter()
        .map(|s| tally_story(s, commonsense, encoder, relations, threshold, beam_width))
        .collect::<Result<Vec<_>, _>>()?;
    let mut totals = vec![Tally::default(); n * n];
    for tallies in per_story {
        for (t, s) in totals.iter_mut().zip(tallies) {
            t.count += s.count;
            t.sum += s.sum;
            t.hits += s.hits;
        }
    }
    let mut stats: Vec<MinedPairStat> = totals
        .into_iter()
        .enumerate()
        .filter(|(_, t)| t.count > 0)
        .map(|(k, t)| {
            let mean = t.sum / t.count as f64;
            MinedPairStat {
                context_relation: relations[k / n].clone(),
                continuation_relation: relations[k % n].clone(),
                sample_count: t.count,
                mean_max_similarity: mean,
                match_rate: t.hits as f64 / t.count as f64,
                rule_candidate: mean >= threshold,
            }
        })
        .collect();
    stats.sort_by(|a, b| {
        b.match_rate
            .total_cmp(&a.match_rate)
            .then(b.mean_max_similarity.total_cmp(&a.mean_max_similarity))
            .then_with(|| (&a.context_relation, &a.continuation_relation).cmp(&(&b.context_relation, &b.continuation_relation)))
    });
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabeledPair {
    pub first: String,
    pub second: String,
    /// 1 when the pair chains coherently, else 0.
    pub label: u8,
    pub match_count: usize,
}

/// Labels each pair by its strict rule-match count: 1 for at least
/// [`COHERENT_MATCHES`] matches, 0 otherwise. Output order follows input.
pub fn label_rl_pairs(
    pairs: &[(String, String)],
    mode: Mode,
    cfg: &GenerationConfig,
    backends: &Backends,
) -> Result<Vec<LabeledPair>, CorpusError> {
    let relations = relations_for(mode);
    pairs
        .par_iter()
        .map(|(first, second)| {
            let a = backends.commonsense.infer(first, &relations, cfg.beam_width)?;
            let b = backends.commonsense.infer(second, &relations, cfg.beam_width)?;
            let verdict = evaluate_candidate(&a, &b, mode, cfg, false, backends.encoder.as_ref())?;
            Ok(LabeledPair {
                first: first.clone(),
                second: second.clone(),
                label: u8::from(verdict.match_count >= COHERENT_MATCHES),
                match_count: verdict.match_count,
            })
        })
        .collect()
}

/// Penalty weight at `iteration`: `max(0, 1 - 0.05 * iteration)`.
pub fn penalty_schedule(iteration: u32) -> f64 {
    (1.0 - PENALTY_DECAY * f64::from(iteration)).max(0.0)
}

/// `rho * beta(iteration) * (1 - label) * loss_s`.
pub fn rl_penalty(loss_s: f64, label: u8, rho: f64, iteration: u32) -> f64 {
    if label != 0 {
        return 0.0;
    }
    rho * penalty_schedule(iteration) * loss_s
}

/// `loss_s + u`. `loss_s` must be computed over the second sentence's
/// tokens only; see [`loss_mask`].
pub fn rl_loss(loss_s: f64, penalty: f64) -> f64 {
    loss_s + penalty
}

/// Per-token loss weights for a concatenated pair: the first sentence is
/// masked out.
pub fn loss_mask(first_tokens: usize, second_tokens: usize) -> Vec<bool> {
    let mut mask = vec![false; first_tokens];
    mask.resize(first_tokens + second_tokens, true);
    mask
}
