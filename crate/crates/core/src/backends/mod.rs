//! Interfaces for every learned or resource-backed component.
//!
//! The engine never links a model runtime. Each capability is a trait:
//! deterministic mocks live in [`mock`], rule-based lexical resources in
//! [`lexical`] and [`parser`], and [`remote`] forwards calls to a model
//! server over a line-delimited JSON socket protocol.
//!
//! All traits require `Send + Sync`; concurrent calls are permitted.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::relation::RelationType;
use crate::story::InferenceSet;
use crate::tag::CharacterTag;
use crate::text::Stopwords;

pub mod lexical;
pub mod mock;
pub mod parser;
pub mod remote;
pub mod sampler;

pub use sampler::{NextTokenModel, TokenSampler, WordTokenizer};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("backend unavailable: {0}")]
    Unavailable(String),
    #[error("context of {tokens} tokens exceeds the model window of {window}")]
    ContextTooLong { tokens: usize, window: usize },
    #[error("lexical resource missing: {0}")]
    ResourceMissing(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("remote error: {0}")]
    Remote(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SamplingParams {
    pub top_p: f64,
    pub temperature: f64,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for SamplingParams {
    fn default() -> Self {
        Self { top_p: 0.9, temperature: 1.0, max_tokens: 20, seed: 0 }
    }
}

/// Tolerance on the sum of a [`TokenDistribution`].
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-6;

/// Next-token probabilities over a vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenDistribution {
    probs: Vec<f64>,
}

impl TokenDistribution {
    /// Rejects negative or non-finite entries and sums off by more than 1e-6.
    pub fn new(probs: Vec<f64>) -> Result<Self, BackendError> {
        if probs.is_empty() {
            return Err(BackendError::InvalidInput("empty distribution".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(BackendError::InvalidInput("distribution has a negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > DISTRIBUTION_TOLERANCE {
            return Err(BackendError::InvalidInput(format!("distribution sums to {sum}")));
        }
        Ok(Self { probs })
    }

    /// Scales non-negative weights to sum to one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, BackendError> {
        let sum: f64 = weights.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(BackendError::InvalidInput("weights must have a positive finite sum".into()));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn vocab_size(&self) -> usize {
        self.probs.len()
    }

    /// Lowest id among the maximal entries.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best as TokenId
    }
}

/// Per-step hook applied to the model's distribution before nucleus
/// truncation and sampling.
pub trait DistributionTransform: Send + Sync {
    fn apply(&self, dist: &TokenDistribution) -> TokenDistribution;
}

impl<F> DistributionTransform for F
where
    F: Fn(&TokenDistribution) -> TokenDistribution + Send + Sync,
{
    fn apply(&self, dist: &TokenDistribution) -> TokenDistribution {
        self(dist)
    }
}

pub const EMBEDDING_NORM_TOLERANCE: f64 = 1e-6;

/// A fixed-length sentence embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    components: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components }
    }

    /// Scales to unit length; `None` for the zero vector.
    pub fn normalized(components: Vec<f64>) -> Option<Self> {
        let norm = components.iter().map(|c| c * c).sum::<f64>().sqrt();
        (norm > 0.0 && norm.is_finite()).then(|| Self { components: components.into_iter().map(|c| c / norm).collect() })
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn norm(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Pluggable tokenize/detokenize.
pub trait Tokenizer: Send + Sync {
    /// Text to token ids. Word-level tokenizers drop out-of-vocabulary words.
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, BackendError>;
    fn decode(&self, ids: &[TokenId]) -> Result<String, BackendError>;
    fn vocab_size(&self) -> usize;
    fn is_sentence_end(&self, id: TokenId) -> bool;
}

/// Text presented to the model when conditioning on a subject:
/// `* [Char_n] * <context>`.
pub fn format_prompt(subject: Option<CharacterTag>, context: &str) -> String {
    match subject {
        Some(tag) => format!("* {tag} * {context}"),
        None => context.to_string(),
    }
}

pub trait LanguageModel: Send + Sync {
    /// Samples one sentence continuing `context`, ending at sentence-final
    /// punctuation or after `params.max_tokens` tokens (then repaired with
    /// a trailing `.`). `transform` is applied at every decoding step.
    fn sample_sentence(
        &self,
        context: &str,
        subject: Option<CharacterTag>,
        transform: Option<&dyn DistributionTransform>,
        params: &SamplingParams,
    ) -> Result<String, BackendError>;
}

pub trait CommonsenseModel: Send + Sync {
    /// Beams of normalized phrases for each requested relation, at most
    /// `beam_width` each. Placeholder generations are dropped.
    fn infer(&self, sentence: &str, relations: &[RelationType], beam_width: usize) -> Result<InferenceSet, BackendError>;
}

pub trait Encoder: Send + Sync {
    /// Unit-norm, deterministic.
    fn encode(&self, phrase: &str) -> Result<EmbeddingVector, BackendError>;
}

pub trait Lexicon: Send + Sync {
    fn synonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError>;
    /// Never overlaps the synonym set of the same phrase.
    fn antonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError>;
}

pub trait Morphology: Send + Sync {
    /// Inflectional variants, including the (lowercased) input.
    fn expand(&self, phrase: &str) -> BTreeSet<String>;
}

pub trait SubjectParser: Send + Sync {
    fn subject_of(&self, sentence: &str) -> Option<CharacterTag>;
}

/// A character mention found by an [`EntityRecognizer`], as a byte span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

pub trait EntityRecognizer: Send + Sync {
    /// Non-overlapping mentions in order.
    fn mentions(&self, sentence: &str) -> Vec<Mention>;
}

/// Completes an InferenceSet from raw phrases: normalize, drop
/// placeholders and duplicates, truncate to `beam_width`.
pub fn build_inference_set<'a, I, P>(sentence: &str, raw: I, relations: &[RelationType], beam_width: usize) -> InferenceSet
where
    I: Fn(&RelationType) -> P,
    P: IntoIterator<Item = &'a str>,
{
    let mut set = InferenceSet::empty(sentence, beam_width);
    for rel in relations {
        let mut beam: Vec<String> = Vec::new();
        for phrase in raw(rel) {
            if beam.len() == beam_width {
                break;
            }
            if let Some(p) = crate::matching::normalize_phrase(phrase) {
                if !beam.contains(&p) {
                    beam.push(p);
                }
            }
        }
        set.beams.insert(rel.clone(), beam);
    }
    set
}

/// The full set of backends the pipeline needs.
#[derive(Clone)]
pub struct Backends {
    pub language_model: Arc<dyn LanguageModel>,
    pub tokenizer: Arc<dyn Tokenizer>,
    pub commonsense: Arc<dyn CommonsenseModel>,
    pub encoder: Arc<dyn Encoder>,
    pub lexicon: Arc<dyn Lexicon>,
    pub morphology: Arc<dyn Morphology>,
    pub parser: Arc<dyn SubjectParser>,
    pub stopwords: Arc<Stopwords>,
}
