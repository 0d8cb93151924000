//! The candidate loop: condition on the history and the next subject,
//! sample, infer, match, and accept or retry.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::backends::{BackendError, Backends, DistributionTransform};
use crate::config::GenerationConfig;
use crate::decoding::{build_constraint_lexicon, LexicalBias};
use crate::matching::{evaluate_candidate, MatchError};
use crate::relation::relations_for;
use crate::story::{InferenceSet, Mode, NameMap, SentenceError, SentenceTelemetry, StorySentence, StoryState};
use crate::tag::{find_tags, CharacterTag};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("invalid prompt: {0}")]
    Prompt(String),
    #[error("story length must be at least 1")]
    InvalidLength,
    #[error("no candidate accepted for position {position} after {tried} candidates, relaxed criteria included")]
    Exhausted { position: usize, tried: usize },
    #[error("no name mapped for {0}")]
    UnmappedTag(CharacterTag),
}

impl From<SentenceError> for PipelineError {
    fn from(e: SentenceError) -> Self {
        PipelineError::Prompt(e.to_string())
    }
}

/// Conditioning subject for the sentence at `position` (the prompt is 0).
/// Multi mode alternates, starting with `[Char_2]` at position 1.
pub fn next_subject(mode: Mode, position: usize) -> CharacterTag {
    match mode {
        Mode::Multi if position % 2 == 1 => CharacterTag::of(2),
        _ => CharacterTag::of(1),
    }
}

/// An accepted sentence with the inferences computed for it, which seed
/// the next step.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub sentence: StorySentence,
    pub telemetry: SentenceTelemetry,
    pub inferences: InferenceSet,
}

/// Commonsense inferences for `sentence` over the relations `mode` consults.
pub fn infer_for_mode(sentence: &str, mode: Mode, cfg: &GenerationConfig, backends: &Backends) -> Result<InferenceSet, BackendError> {
    backends.commonsense.infer(sentence, &relations_for(mode), cfg.beam_width)
}

/// Generates the sentence following `state`, inferring on its last sentence.
pub fn generate_sentence(
    state: &StoryState,
    cfg: &GenerationConfig,
    backends: &Backends,
) -> Result<(StorySentence, SentenceTelemetry), PipelineError> {
    let previous = infer_for_mode(state.last().text(), state.mode, cfg, backends)?;
    generate_sentence_from(state, &previous, cfg, backends).map(|a| (a.sentence, a.telemetry))
}

/// As [`generate_sentence`], with the last sentence's inferences supplied.
///
/// Candidate seeds come from a ChaCha stream keyed by `cfg.random_seed` and
/// the position, so a story is reproducible sentence by sentence.
pub fn generate_sentence_from(
    state: &StoryState,
    previous: &InferenceSet,
    cfg: &GenerationConfig,
    backends: &Backends,
) -> Result<Accepted, PipelineError> {
    let mode = state.mode;
    let position = state.next_position();
    let subject = next_subject(mode, position);
    let relations = relations_for(mode);
    let history = state.history();

    let bias = if cfg.decoding_control_enabled && !previous.is_empty() {
        let lexicon = build_constraint_lexicon(
            previous,
            backends.lexicon.as_ref(),
            backends.morphology.as_ref(),
            backends.tokenizer.as_ref(),
            &backends.stopwords,
        )?;
        Some(LexicalBias { lexicon, mu: cfg.mu, top_k: cfg.top_k })
    } else {
        None
    };
    let transform = bias.as_ref().map(|b| b as &dyn DistributionTransform);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.random_seed);
    rng.set_stream(position as u64);
    let limit = cfg.candidate_limit;
    for attempt in 0..2 * limit {
        let relaxed = attempt >= limit;
        let params = cfg.sampling_params(rng.next_u64());
        let text = backends.language_model.sample_sentence(&history, Some(subject), transform, &params)?;
        if !text.chars().any(char::is_alphanumeric) {
            continue;
        }
        let parsed = backends.parser.subject_of(&text);
        if mode == Mode::Multi && parsed != Some(subject) {
            log::debug!("position {position}: discarded candidate without subject {subject}: {text}");
            continue;
        }
        let inferences = backends.commonsense.infer(&text, &relations, cfg.beam_width)?;
        let verdict = evaluate_candidate(previous, &inferences, mode, cfg, relaxed, backends.encoder.as_ref())?;
        if verdict.accepted {
            let sentence = StorySentence::new(&text, parsed, position)?;
            let telemetry = SentenceTelemetry {
                position,
                candidates_tried: attempt + 1,
                relaxation_used: relaxed,
                match_count: verdict.match_count,
            };
            return Ok(Accepted { sentence, telemetry, inferences });
        }
    }
    Err(PipelineError::Exhausted { position, tried: 2 * limit })
}

/// Generates a story of exactly `length` sentences, the prompt included.
pub fn generate_story(
    prompt: &str,
    mode: Mode,
    length: usize,
    cfg: &GenerationConfig,
    backends: &Backends,
    name_map: NameMap,
) -> Result<StoryState, PipelineError> {
    if length == 0 {
        return Err(PipelineError::InvalidLength);
    }
    if find_tags(prompt).is_empty() {
        return Err(PipelineError::Prompt(format!("no character tag in {prompt:?}")));
    }
    let subject = backends.parser.subject_of(prompt);
    let mut state = StoryState::new(StorySentence::new(prompt, subject, 0)?, mode, name_map);
    let mut previous = infer_for_mode(state.last().text(), mode, cfg, backends)?;
    while state.len() < length {
        let accepted = generate_sentence_from(&state, &previous, cfg, backends)?;
        log::debug!("accepted {:?} after {} candidates", accepted.sentence.text(), accepted.telemetry.candidates_tried);
        state.push(accepted.sentence, accepted.telemetry);
        previous = accepted.inferences;
    }
    Ok(state)
}

/// Replaces every tag in `text` with its mapped name.
pub fn substitute_in(text: &str, names: &NameMap) -> Result<String, PipelineError> {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end, tag) in find_tags(text) {
        let name = names.get(&tag).ok_or(PipelineError::UnmappedTag(tag))?;
        out.push_str(&text[last..start]);
        out.push_str(name);
        last = end;
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// The story text with names in place of tags.
pub fn substitute_names(state: &StoryState) -> Result<String, PipelineError> {
    substitute_in(&state.history(), &state.name_map)
}
