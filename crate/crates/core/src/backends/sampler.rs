//! Token-level decoding: a word tokenizer, the next-token model seam, and
//! the nucleus sampler that turns one into a [`LanguageModel`].

use std::collections::{BTreeSet, HashMap};

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    format_prompt, BackendError, DistributionTransform, LanguageModel, SamplingParams, TokenDistribution, TokenId,
    Tokenizer,
};
use crate::tag::CharacterTag;
use crate::text::{ensure_terminal_punctuation, join_tokens, split_tokens, SENTENCE_FINAL};

/// Word-level tokenizer over a fixed vocabulary. Unknown words are dropped
/// on encode.
#[derive(Debug, Clone)]
pub struct WordTokenizer {
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl WordTokenizer {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vec::new();
        let mut index = HashMap::new();
        for w in words {
            let w = w.into();
            if !index.contains_key(&w) {
                index.insert(w.clone(), vocab.len() as TokenId);
                vocab.push(w);
            }
        }
        Self { vocab, index }
    }

    /// Vocabulary of every token in `texts` plus `. ! ? *`, sorted.
    pub fn from_texts<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut words: BTreeSet<String> = [".", "!", "?", "*"].iter().map(|s| s.to_string()).collect();
        for text in texts {
            words.extend(split_tokens(text));
        }
        Self::new(words)
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).or_else(|| self.index.get(&word.to_lowercase())).copied()
    }

    pub fn word(&self, id: TokenId) -> Option<&str> {
        self.vocab.get(id as usize).map(String::as_str)
    }
}

impl Tokenizer for WordTokenizer {
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, BackendError> {
        Ok(split_tokens(text).iter().filter_map(|t| self.id(t)).collect())
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, BackendError> {
        let words = ids
            .iter()
            .map(|id| self.word(*id).ok_or_else(|| BackendError::InvalidInput(format!("token id {id} out of range"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(join_tokens(&words))
    }

    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn is_sentence_end(&self, id: TokenId) -> bool {
        self.word(id).is_some_and(|w| w.len() == 1 && w.chars().all(|c| SENTENCE_FINAL.contains(&c)))
    }
}

/// A model exposing its per-step distribution.
pub trait NextTokenModel: Send + Sync {
    fn tokenizer(&self) -> &dyn Tokenizer;
    fn context_window(&self) -> usize;
    fn next_token_distribution(&self, prompt: &[TokenId], generated: &[TokenId]) -> Result<TokenDistribution, BackendError>;
}

/// Temperature, then nucleus truncation to the smallest prefix (by
/// descending probability, ties to lower id) whose mass reaches `top_p`,
/// then a weighted draw.
pub fn nucleus_sample(dist: &TokenDistribution, top_p: f64, temperature: f64, rng: &mut impl rand::Rng) -> TokenId {
    let weights: Vec<f64> = if (temperature - 1.0).abs() < f64::EPSILON {
        dist.probs().to_vec()
    } else {
        dist.probs().iter().map(|p| if *p > 0.0 { p.powf(1.0 / temperature) } else { 0.0 }).collect()
    };
    let total: f64 = weights.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).filter(|i| weights[*i] > 0.0).collect();
    if order.is_empty() || !(total > 0.0 && total.is_finite()) {
        return dist.argmax();
    }
    order.sort_by(|a, b| weights[*b].total_cmp(&weights[*a]).then(a.cmp(b)));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for i in order {
        kept.push(i);
        mass += weights[i] / total;
        if mass >= top_p {
            break;
        }
    }
    match WeightedIndex::new(kept.iter().map(|i| weights[*i])) {
        Ok(w) => kept[w.sample(rng)] as TokenId,
        Err(_) => kept[0] as TokenId,
    }
}

/// Runs the autoregressive loop of a [`NextTokenModel`] with a seeded RNG.
pub struct TokenSampler<M> {
    model: M,
}

impl<M: NextTokenModel> TokenSampler<M> {
    pub fn new(model: M) -> Self {
        Self { model }
    }

    pub fn model(&self) -> &M {
        &self.model
    }
}

impl<M: NextTokenModel> LanguageModel for TokenSampler<M> {
    fn sample_sentence(
        &self,
        context: &str,
        subject: Option<CharacterTag>,
        transform: Option<&dyn DistributionTransform>,
        params: &SamplingParams,
    ) -> Result<String, BackendError> {
        if context.trim().is_empty() {
            return Err(BackendError::InvalidInput("empty context".into()));
        }
        let tokenizer = self.model.tokenizer();
        let prompt = tokenizer.encode(&format_prompt(subject, context))?;
        let window = self.model.context_window();
        if prompt.len() + params.max_tokens > window {
            return Err(BackendError::ContextTooLong { tokens: prompt.len(), window });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut generated: Vec<TokenId> = Vec::with_capacity(params.max_tokens);
        while generated.len() < params.max_tokens {
            let mut dist = self.model.next_token_distribution(&prompt, &generated)?;
            if let Some(t) = transform {
                dist = t.apply(&dist);
            }
            let id = nucleus_sample(&dist, params.top_p, params.temperature, &mut rng);
            generated.push(id);
            if tokenizer.is_sentence_end(id) {
                break;
            }
        }
        Ok(ensure_terminal_punctuation(&tokenizer.decode(&generated)?))
    }
}

/// Cuts whitespace-delimited text at the first token ending in sentence-final
/// punctuation or after `max_tokens` tokens, then repairs the ending.
pub fn truncate_sentence(text: &str, max_tokens: usize) -> String {
    let mut kept = Vec::new();
    for tok in text.split_whitespace().take(max_tokens) {
        kept.push(tok);
        if tok.ends_with(SENTENCE_FINAL) {
            break;
        }
    }
    ensure_terminal_punctuation(&kept.join(" "))
}
