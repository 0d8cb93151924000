//! Soft lexical constraints: the previous sentence's inferences, widened by
//! synonyms, antonyms, and inflection, bias the next-token distribution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backends::{BackendError, DistributionTransform, Lexicon, Morphology, TokenDistribution, TokenId, Tokenizer};
use crate::story::InferenceSet;
use crate::text::{words, Stopwords};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstraintLexicon {
    pub synonym_phrases: BTreeSet<String>,
    pub antonym_phrases: BTreeSet<String>,
    pub boost_tokens: BTreeSet<TokenId>,
    pub penalty_tokens: BTreeSet<TokenId>,
}

impl ConstraintLexicon {
    pub fn is_empty(&self) -> bool {
        self.boost_tokens.is_empty() && self.penalty_tokens.is_empty()
    }
}

fn expand_all(phrases: &BTreeSet<String>, morphology: &dyn Morphology) -> BTreeSet<String> {
    phrases.iter().flat_map(|p| morphology.expand(p)).collect()
}

fn content_tokens(
    phrases: &BTreeSet<String>,
    tokenizer: &dyn Tokenizer,
    stopwords: &Stopwords,
) -> Result<BTreeSet<TokenId>, BackendError> {
    let mut out = BTreeSet::new();
    let content: BTreeSet<String> = phrases.iter().flat_map(|p| words(p)).filter(|w| !stopwords.contains(w)).collect();
    for word in content {
        out.extend(tokenizer.encode(&word)?);
    }
    Ok(out)
}

/// Synonyms of every inferred phrase form the boost side, antonyms the
/// penalty side. Both are expanded through `morphology`, and the content
/// words are tokenized one by one. Tokens on both sides are dropped from
/// both.
pub fn build_constraint_lexicon(
    inferences: &InferenceSet,
    lexicon: &dyn Lexicon,
    morphology: &dyn Morphology,
    tokenizer: &dyn Tokenizer,
    stopwords: &Stopwords,
) -> Result<ConstraintLexicon, BackendError> {
    let mut synonyms = BTreeSet::new();
    let mut antonyms = BTreeSet::new();
    let phrases: BTreeSet<&str> = inferences.phrases().collect();
    for phrase in phrases {
        synonyms.extend(lexicon.synonyms(phrase)?);
        antonyms.extend(lexicon.antonyms(phrase)?);
    }
    let synonym_phrases = expand_all(&synonyms, morphology);
    let antonym_phrases = expand_all(&antonyms, morphology);
    let mut boost_tokens = content_tokens(&synonym_phrases, tokenizer, stopwords)?;
    let mut penalty_tokens = content_tokens(&antonym_phrases, tokenizer, stopwords)?;
    let conflicts: Vec<TokenId> = boost_tokens.intersection(&penalty_tokens).copied().collect();
    for t in conflicts {
        boost_tokens.remove(&t);
        penalty_tokens.remove(&t);
    }
    Ok(ConstraintLexicon { synonym_phrases, antonym_phrases, boost_tokens, penalty_tokens })
}

/// `1 + mu` for boosted tokens, `1 - mu` for penalized ones, else 1.
pub fn delta_factor(token: TokenId, lex: &ConstraintLexicon, mu: f64) -> f64 {
    if lex.boost_tokens.contains(&token) {
        1.0 + mu
    } else if lex.penalty_tokens.contains(&token) {
        1.0 - mu
    } else {
        1.0
    }
}

/// Ids of the `k` most probable tokens, ties broken toward lower ids.
pub fn top_k_ids(dist: &TokenDistribution, k: usize) -> Vec<usize> {
    let probs = dist.probs();
    let mut ids: Vec<usize> = (0..probs.len()).collect();
    if k == 0 {
        return Vec::new();
    }
    if k < ids.len() {
        ids.select_nth_unstable_by(k - 1, |a, b| probs[*b].total_cmp(&probs[*a]).then(a.cmp(b)));
        ids.truncate(k);
    }
    ids
}

/// Scales the `top_k` most probable entries by their delta factor and
/// renormalizes the whole vector. Returns the input unchanged when no
/// factor differs from 1.
pub fn transform_distribution(dist: &TokenDistribution, lex: &ConstraintLexicon, mu: f64, top_k: usize) -> TokenDistribution {
    if mu == 0.0 || lex.is_empty() {
        return dist.clone();
    }
    let mut probs = dist.probs().to_vec();
    let mut touched = false;
    for id in top_k_ids(dist, top_k) {
        let delta = delta_factor(id as TokenId, lex, mu);
        if delta != 1.0 && probs[id] > 0.0 {
            probs[id] *= delta;
            touched = true;
        }
    }
    if !touched {
        return dist.clone();
    }
    let sum: f64 = probs.iter().sum();
    TokenDistribution::new(probs.into_iter().map(|p| p / sum).collect()).expect("rescaled distribution stays normalized")
}

/// The per-step transform handed to the sampler.
#[derive(Debug, Clone)]
pub struct LexicalBias {
    pub lexicon: ConstraintLexicon,
    pub mu: f64,
    pub top_k: usize,
}

impl DistributionTransform for LexicalBias {
    fn apply(&self, dist: &TokenDistribution) -> TokenDistribution {
        transform_distribution(dist, &self.lexicon, self.mu, self.top_k)
    }
}
