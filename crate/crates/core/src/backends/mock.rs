//! Deterministic mock backends for tests and CI runs without a model
//! runtime.
//!
//! * [`ScriptedLanguageModel`] replays canned sentences, optionally per
//!   conditioning subject, and records every prompt it receives.
//! * [`SentenceBankModel`] is a token-level model whose next-token
//!   distribution follows a prefix tree of bank sentences, so the lexical
//!   bias transform genuinely changes which sentence gets sampled.
//! * [`FixtureCommonsense`] and [`FixtureLexicon`] return fixture data
//!   verbatim; [`KeywordCommonsense`] derives inferences from content words.
//! * [`BagOfWordsEncoder`] hashes words into a fixed-length count vector.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::Hasher;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use fnv::FnvHasher;
use regex::Regex;
use serde::Deserialize;

use super::lexical::{RuleMorphology, ThesaurusLexicon};
use super::parser::HeuristicSubjectParser;
use super::sampler::{truncate_sentence, NextTokenModel, TokenSampler, WordTokenizer};
use super::{
    build_inference_set, format_prompt, Backends, BackendError, CommonsenseModel, DistributionTransform,
    EmbeddingVector, Encoder, EntityRecognizer, LanguageModel, Lexicon, Mention, SamplingParams, TokenDistribution,
    TokenId, Tokenizer,
};
use crate::relation::RelationType;
use crate::story::InferenceSet;
use crate::tag::CharacterTag;
use crate::text::{words, Stopwords};

/// FNV-1a over the UTF-8 bytes; stable across platforms and releases.
pub fn stable_hash(parts: &[&str]) -> u64 {
    let mut h = FnvHasher::default();
    for p in parts {
        h.write(p.as_bytes());
        h.write_u8(0);
    }
    h.finish()
}

/// Replays scripted sentences in order, cycling when exhausted. Scripts can
/// be keyed by the conditioning subject; calls without a matching key use
/// the unkeyed script. The lexical transform is ignored.
#[derive(Debug, Default)]
pub struct ScriptedLanguageModel {
    scripts: BTreeMap<Option<CharacterTag>, Vec<String>>,
    cursors: Mutex<BTreeMap<Option<CharacterTag>, usize>>,
    prompts: Mutex<Vec<String>>,
    context_window: Option<usize>,
}

impl ScriptedLanguageModel {
    pub fn new<S: Into<String>>(script: impl IntoIterator<Item = S>) -> Self {
        let mut scripts = BTreeMap::new();
        scripts.insert(None, script.into_iter().map(Into::into).collect());
        Self { scripts, ..Default::default() }
    }

    pub fn by_subject<S: Into<String>>(scripts: impl IntoIterator<Item = (CharacterTag, Vec<S>)>) -> Self {
        let scripts = scripts
            .into_iter()
            .map(|(tag, lines)| (Some(tag), lines.into_iter().map(Into::into).collect()))
            .collect();
        Self { scripts, ..Default::default() }
    }

    /// Limit, in whitespace tokens, on the prompt length.
    pub fn with_context_window(mut self, tokens: usize) -> Self {
        self.context_window = Some(tokens);
        self
    }

    /// Every prompt presented so far, including the `*T*` prefix.
    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().expect("prompt log poisoned").clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().expect("prompt log poisoned").len()
    }
}

impl LanguageModel for ScriptedLanguageModel {
    fn sample_sentence(
        &self,
        context: &str,
        subject: Option<CharacterTag>,
        _transform: Option<&dyn DistributionTransform>,
        params: &SamplingParams,
    ) -> Result<String, BackendError> {
        if context.trim().is_empty() {
            return Err(BackendError::InvalidInput("empty context".into()));
        }
        let prompt = format_prompt(subject, context);
        if let Some(window) = self.context_window {
            let tokens = prompt.split_whitespace().count();
            if tokens > window {
                return Err(BackendError::ContextTooLong { tokens, window });
            }
        }
        self.prompts.lock().expect("prompt log poisoned").push(prompt);
        let key = if self.scripts.contains_key(&subject) { subject } else { None };
        let script = self
            .scripts
            .get(&key)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| BackendError::Unavailable("no script for this subject".into()))?;
        let mut cursors = self.cursors.lock().expect("cursor lock poisoned");
        let cursor = cursors.entry(key).or_insert(0);
        let line = &script[*cursor % script.len()];
        *cursor += 1;
        Ok(truncate_sentence(line, params.max_tokens))
    }
}

/// Sentence → relation → phrases, as stored in a fixture file.
pub type CommonsenseFixture = BTreeMap<String, BTreeMap<String, Vec<String>>>;

/// Returns fixture beams for known sentences. Unknown sentences go to the
/// fallback model when set, otherwise yield empty beams.
#[derive(Default)]
pub struct FixtureCommonsense {
    fixture: CommonsenseFixture,
    fallback: Option<Arc<dyn CommonsenseModel>>,
}

impl FixtureCommonsense {
    pub fn new(fixture: CommonsenseFixture) -> Self {
        let fixture = fixture.into_iter().map(|(k, v)| (k.trim().to_string(), v)).collect();
        Self { fixture, fallback: None }
    }

    /// A JSON object `{sentence: {relation: [phrase, ...]}}`.
    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text)
            .map(Self::new)
            .map_err(|e| BackendError::InvalidInput(format!("commonsense fixture: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::ResourceMissing(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn with_fallback(mut self, fallback: Arc<dyn CommonsenseModel>) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn insert(&mut self, sentence: &str, relation: &str, phrases: &[&str]) {
        self.fixture
            .entry(sentence.trim().to_string())
            .or_default()
            .insert(relation.to_string(), phrases.iter().map(|p| p.to_string()).collect());
    }
}

impl CommonsenseModel for FixtureCommonsense {
    fn infer(&self, sentence: &str, relations: &[RelationType], beam_width: usize) -> Result<InferenceSet, BackendError> {
        match self.fixture.get(sentence.trim()) {
            Some(entry) => Ok(build_inference_set(
                sentence,
                |rel: &RelationType| entry.get(rel.name()).into_iter().flatten().map(String::as_str),
                relations,
                beam_width,
            )),
            None => match &self.fallback {
                Some(fb) => fb.infer(sentence, relations, beam_width),
                None => Ok(build_inference_set(sentence, |_: &RelationType| std::iter::empty(), relations, beam_width)),
            },
        }
    }
}

/// Derives inferences from a sentence's content-word lemmas: each relation
/// keeps the lemmas whose hash with the relation name is not divisible by
/// eight. Sentences sharing content words therefore share some, but not
/// all, relation arguments.
pub struct KeywordCommonsense {
    morphology: Arc<RuleMorphology>,
    stopwords: Arc<Stopwords>,
}

impl KeywordCommonsense {
    pub fn new(morphology: Arc<RuleMorphology>, stopwords: Arc<Stopwords>) -> Self {
        Self { morphology, stopwords }
    }

    fn lemmas(&self, sentence: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for w in words(sentence) {
            if w.starts_with('[') || self.stopwords.contains(&w) {
                continue;
            }
            let lemma = self.morphology.lemma(&w).map(|(l, _)| l.to_string()).unwrap_or(w);
            if !out.contains(&lemma) {
                out.push(lemma);
            }
        }
        out
    }
}

impl CommonsenseModel for KeywordCommonsense {
    fn infer(&self, sentence: &str, relations: &[RelationType], beam_width: usize) -> Result<InferenceSet, BackendError> {
        let lemmas = self.lemmas(sentence);
        Ok(build_inference_set(
            sentence,
            |rel: &RelationType| {
                lemmas
                    .iter()
                    .filter(|l| !stable_hash(&[rel.name(), l]).is_multiple_of(8))
                    .map(String::as_str)
                    .collect::<Vec<_>>()
            },
            relations,
            beam_width,
        ))
    }
}

/// Hashed bag-of-words embedding. With lemmas enabled, stopwords are dropped
/// and inflected forms collapse to their dictionary form, so `to sleep` and
/// `sleeping` embed identically.
pub struct BagOfWordsEncoder {
    dim: usize,
    lemmas: Option<(Arc<RuleMorphology>, Arc<Stopwords>)>,
}

impl BagOfWordsEncoder {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        Self { dim, lemmas: None }
    }

    pub fn with_lemmas(mut self, morphology: Arc<RuleMorphology>, stopwords: Arc<Stopwords>) -> Self {
        self.lemmas = Some((morphology, stopwords));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn features(&self, phrase: &str) -> Vec<String> {
        let all = words(phrase);
        let Some((morph, stop)) = &self.lemmas else {
            return all;
        };
        let content: Vec<String> = all
            .iter()
            .filter(|w| !stop.contains(w))
            .map(|w| morph.lemma(w).map(|(l, _)| l.to_string()).unwrap_or_else(|| w.clone()))
            .collect();
        if content.is_empty() {
            all
        } else {
            content
        }
    }
}

impl Encoder for BagOfWordsEncoder {
    fn encode(&self, phrase: &str) -> Result<EmbeddingVector, BackendError> {
        let mut counts = vec![0.0; self.dim];
        for f in self.features(phrase) {
            counts[(stable_hash(&[&f]) % self.dim as u64) as usize] += 1.0;
        }
        EmbeddingVector::normalized(counts)
            .ok_or_else(|| BackendError::InvalidInput(format!("nothing to encode in {phrase:?}")))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LexiconEntry {
    #[serde(default)]
    pub synonyms: BTreeSet<String>,
    #[serde(default)]
    pub antonyms: BTreeSet<String>,
}

/// Phrase-keyed synonym/antonym fixture. Unknown phrases map to
/// `{phrase}` and `{}`.
#[derive(Debug, Clone, Default)]
pub struct FixtureLexicon {
    entries: BTreeMap<String, LexiconEntry>,
}

impl FixtureLexicon {
    pub fn new(entries: BTreeMap<String, LexiconEntry>) -> Self {
        Self { entries }
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        serde_json::from_str(text)
            .map(Self::new)
            .map_err(|e| BackendError::InvalidInput(format!("lexicon fixture: {e}")))
    }

    pub fn insert(&mut self, phrase: &str, synonyms: &[&str], antonyms: &[&str]) {
        self.entries.insert(
            phrase.to_string(),
            LexiconEntry {
                synonyms: synonyms.iter().map(|s| s.to_string()).collect(),
                antonyms: antonyms.iter().map(|s| s.to_string()).collect(),
            },
        );
    }
}

impl Lexicon for FixtureLexicon {
    fn synonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        Ok(match self.entries.get(phrase) {
            Some(e) => e.synonyms.iter().filter(|s| !s.is_empty()).cloned().collect(),
            None => BTreeSet::from([phrase.to_string()]),
        })
    }

    fn antonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        let synonyms = self.synonyms(phrase)?;
        Ok(match self.entries.get(phrase) {
            Some(e) => e.antonyms.iter().filter(|a| !a.is_empty() && !synonyms.contains(*a)).cloned().collect(),
            None => BTreeSet::new(),
        })
    }
}

const BUILTIN_BANK: &str = include_str!("../../data/mock_sentences.txt");

/// Weight of a bank sentence that already occurs in the prompt.
const REPEAT_WEIGHT: f64 = 0.05;

/// Token-level mock whose next-token distribution is the empirical
/// continuation distribution of bank sentences sharing the generated
/// prefix. A `* [Char_n] *` prompt prefix restricts the bank to sentences
/// with that subject.
pub struct SentenceBankModel {
    tokenizer: WordTokenizer,
    bank: Vec<(CharacterTag, Vec<TokenId>)>,
    context_window: usize,
}

impl SentenceBankModel {
    /// Template lines use `{S}` for the subject and `{O}` for the other
    /// character; each line is instantiated for both `[Char_1]` and
    /// `[Char_2]` as subject.
    pub fn from_templates(text: &str) -> Self {
        let mut sentences = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            for (s, o) in [(1, 2), (2, 1)] {
                let (s, o) = (CharacterTag::of(s), CharacterTag::of(o));
                sentences.push((s, line.replace("{S}", &s.render()).replace("{O}", &o.render())));
            }
        }
        let tokenizer = WordTokenizer::from_texts(sentences.iter().map(|(_, t)| t.as_str()));
        let bank = sentences
            .into_iter()
            .map(|(s, t)| (s, tokenizer.encode(&t).expect("word tokenizer is infallible")))
            .collect();
        Self { tokenizer, bank, context_window: 4096 }
    }

    pub fn builtin() -> Self {
        Self::from_templates(BUILTIN_BANK)
    }

    pub fn word_tokenizer(&self) -> &WordTokenizer {
        &self.tokenizer
    }

    pub fn sentences(&self) -> Vec<String> {
        self.bank.iter().map(|(_, ids)| self.tokenizer.decode(ids).expect("bank ids are in range")).collect()
    }

    fn prompt_subject(&self, prompt: &[TokenId]) -> Option<CharacterTag> {
        let star = self.tokenizer.id("*")?;
        match prompt {
            [a, tag, b, ..] if *a == star && *b == star => self.tokenizer.word(*tag)?.parse().ok(),
            _ => None,
        }
    }
}

fn contains_run(haystack: &[TokenId], needle: &[TokenId]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

impl NextTokenModel for SentenceBankModel {
    fn tokenizer(&self) -> &dyn Tokenizer {
        &self.tokenizer
    }

    fn context_window(&self) -> usize {
        self.context_window
    }

    fn next_token_distribution(&self, prompt: &[TokenId], generated: &[TokenId]) -> Result<TokenDistribution, BackendError> {
        let subject = self.prompt_subject(prompt);
        let has_subject = subject.is_some_and(|s| self.bank.iter().any(|(t, _)| *t == s));
        let mut weights = vec![0.0; self.tokenizer.vocab_size()];
        for (tag, ids) in &self.bank {
            if has_subject && Some(*tag) != subject {
                continue;
            }
            if ids.len() > generated.len() && ids.starts_with(generated) {
                let w = if contains_run(prompt, ids) { REPEAT_WEIGHT } else { 1.0 };
                weights[ids[generated.len()] as usize] += w;
            }
        }
        if weights.iter().all(|w| *w == 0.0) {
            let period = self.tokenizer.id(".").expect("bank vocabulary has a period");
            weights[period as usize] = 1.0;
        }
        TokenDistribution::from_weights(weights)
    }
}

/// Finds known first names and legacy gendered tags (`[MALE]`, `[FEMALE]`,
/// `[NEUTRAL]`).
#[derive(Debug, Clone)]
pub struct NameListRecognizer {
    names: HashSet<String>,
}

const BUILTIN_NAMES: &str = include_str!("../../data/names.txt");

impl NameListRecognizer {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self { names: names.into_iter().map(Into::into).collect() }
    }

    pub fn with_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.names.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn builtin() -> Self {
        Self::new(BUILTIN_NAMES.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')))
    }
}

fn mention_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[(?:MALE|FEMALE|NEUTRAL)\]|\b[A-Z][a-z]+\b").expect("valid mention regex"))
}

impl EntityRecognizer for NameListRecognizer {
    fn mentions(&self, sentence: &str) -> Vec<Mention> {
        mention_regex()
            .find_iter(sentence)
            .filter(|m| m.as_str().starts_with('[') || self.names.contains(m.as_str()))
            .map(|m| Mention { start: m.start(), end: m.end(), text: m.as_str().to_string() })
            .collect()
    }
}

/// Embedding dimension of the mock suite encoder.
pub const MOCK_EMBEDDING_DIM: usize = 1024;

/// The full deterministic suite: sentence-bank LM, keyword inferences,
/// lemma bag-of-words encoder, built-in thesaurus and inflection tables.
pub fn mock_backends() -> Backends {
    mock_backends_with(None)
}

/// As [`mock_backends`], with fixture inferences taking precedence over
/// the keyword model.
pub fn mock_backends_with(fixture: Option<FixtureCommonsense>) -> Backends {
    let morphology = RuleMorphology::builtin();
    let stopwords = Arc::new(Stopwords::builtin().clone());
    let bank = SentenceBankModel::builtin();
    let tokenizer: Arc<dyn Tokenizer> = Arc::new(bank.word_tokenizer().clone());
    let keyword: Arc<dyn CommonsenseModel> = Arc::new(KeywordCommonsense::new(morphology.clone(), stopwords.clone()));
    let commonsense = match fixture {
        Some(f) => Arc::new(f.with_fallback(keyword)) as Arc<dyn CommonsenseModel>,
        None => keyword,
    };
    Backends {
        language_model: Arc::new(TokenSampler::new(bank)),
        tokenizer,
        commonsense,
        encoder: Arc::new(BagOfWordsEncoder::new(MOCK_EMBEDDING_DIM).with_lemmas(morphology.clone(), stopwords.clone())),
        lexicon: Arc::new(ThesaurusLexicon::builtin()),
        morphology: morphology.clone(),
        parser: Arc::new(HeuristicSubjectParser::new(morphology)),
        stopwords,
    }
}

/// Memoizes another encoder; embeddings are deterministic so caching is
/// transparent.
pub struct CachedEncoder<E> {
    inner: E,
    cache: Mutex<HashMap<String, EmbeddingVector>>,
}

impl<E: Encoder> CachedEncoder<E> {
    pub fn new(inner: E) -> Self {
        Self { inner, cache: Mutex::new(HashMap::new()) }
    }
}

impl<E: Encoder> Encoder for CachedEncoder<E> {
    fn encode(&self, phrase: &str) -> Result<EmbeddingVector, BackendError> {
        if let Some(v) = self.cache.lock().expect("encoder cache poisoned").get(phrase) {
            return Ok(v.clone());
        }
        let v = self.inner.encode(phrase)?;
        self.cache.lock().expect("encoder cache poisoned").insert(phrase.to_string(), v.clone());
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::SubjectParser;
    use crate::matching::cosine_similarity;

    #[test]
    fn scripted_returns_script() {
        let lm = ScriptedLanguageModel::new(["Alice smiled."]);
        let p = SamplingParams::default();
        assert_eq!(lm.sample_sentence("anything", None, None, &p).unwrap(), "Alice smiled.");
        assert_eq!(lm.sample_sentence("else", None, None, &p).unwrap(), "Alice smiled.");
    }

    #[test]
    fn scripted_records_prefixed_prompt() {
        let lm = ScriptedLanguageModel::new(["Because of this, [Char_2] apologized."]);
        lm.sample_sentence("[Char_1] was upset with [Char_2].", Some(CharacterTag::of(2)), None, &SamplingParams::default())
            .unwrap();
        assert_eq!(lm.prompts(), vec!["* [Char_2] * [Char_1] was upset with [Char_2]."]);
    }

    #[test]
    fn scripted_truncates_to_max_tokens() {
        let thirty: Vec<String> = (1..=30).map(|i| format!("tok{i}")).collect();
        let lm = ScriptedLanguageModel::new([thirty.join(" ")]);
        let p = SamplingParams { max_tokens: 20, ..Default::default() };
        let out = lm.sample_sentence("ctx", None, None, &p).unwrap();
        let toks: Vec<&str> = out.split_whitespace().collect();
        assert_eq!(toks.len(), 20);
        assert_eq!(toks[19], "tok20.");
    }

    #[test]
    fn scripted_context_window() {
        let lm = ScriptedLanguageModel::new(["x."]).with_context_window(3);
        let err = lm.sample_sentence("a b c d", None, None, &SamplingParams::default()).unwrap_err();
        assert_eq!(err, BackendError::ContextTooLong { tokens: 4, window: 3 });
    }

    #[test]
    fn fixture_commonsense_identity_and_truncation() {
        let mut fx = FixtureCommonsense::default();
        let eight: Vec<String> = (0..8).map(|i| format!("phrase {i}")).collect();
        let refs: Vec<&str> = eight.iter().map(String::as_str).collect();
        fx.insert("[Char_1] gives [Char_2] a burger", "oWant", &["to thank", "to eat"]);
        fx.insert("s", "xWant", &refs);
        let rels = [RelationType::from("oWant")];
        let set = fx.infer("[Char_1] gives [Char_2] a burger", &rels, 5).unwrap();
        assert_eq!(set.beam(&rels[0]), &["to thank", "to eat"]);
        let rels = [RelationType::from("xWant")];
        assert_eq!(fx.infer("s", &rels, 5).unwrap().beam(&rels[0]).len(), 5);
        assert!(fx.infer("unknown", &rels, 5).unwrap().is_empty());
    }

    #[test]
    fn bag_of_words_cosines() {
        let enc = BagOfWordsEncoder::new(MOCK_EMBEDDING_DIM);
        let a = enc.encode("go beach").unwrap();
        let b = enc.encode("go beach").unwrap();
        let c = enc.encode("read book").unwrap();
        assert_eq!(a, b);
        assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine_similarity(&a, &c).unwrap(), 0.0);
        assert!((a.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn lemma_encoder_merges_inflections() {
        let enc = BagOfWordsEncoder::new(MOCK_EMBEDDING_DIM)
            .with_lemmas(RuleMorphology::builtin(), Arc::new(Stopwords::builtin().clone()));
        let a = enc.encode("to sleep").unwrap();
        let b = enc.encode("sleeping").unwrap();
        assert!(cosine_similarity(&a, &b).unwrap() >= 0.8);
        assert!(enc.encode("").is_err());
        // All-stopword phrases fall back to their raw words.
        assert!(enc.encode("to").is_ok());
    }

    #[test]
    fn fixture_lexicon_identity() {
        let mut lex = FixtureLexicon::default();
        lex.insert("go to beach", &["move to beach", "go to beach"], &["leave beach"]);
        assert_eq!(lex.synonyms("go to beach").unwrap().len(), 2);
        assert_eq!(lex.antonyms("go to beach").unwrap(), BTreeSet::from(["leave beach".to_string()]));
        assert_eq!(lex.synonyms("zzqx").unwrap(), BTreeSet::from(["zzqx".to_string()]));
        assert!(lex.antonyms("zzqx").unwrap().is_empty());
    }

    #[test]
    fn sentence_bank_honors_subject_prefix() {
        let lm = TokenSampler::new(SentenceBankModel::builtin());
        let parser = HeuristicSubjectParser::default();
        for seed in 0..20 {
            let p = SamplingParams { seed, ..Default::default() };
            let out = lm.sample_sentence("[Char_1] went to the beach.", Some(CharacterTag::of(2)), None, &p).unwrap();
            assert_eq!(parser.subject_of(&out), Some(CharacterTag::of(2)), "{out}");
            assert!(SentenceBankModel::builtin().sentences().contains(&out), "{out}");
        }
    }

    #[test]
    fn keyword_commonsense_is_deterministic_and_lemmatized() {
        let kc = KeywordCommonsense::new(RuleMorphology::builtin(), Arc::new(Stopwords::builtin().clone()));
        let rels: Vec<RelationType> = crate::relation::IN_SCOPE_RELATIONS.iter().map(|r| RelationType::from(*r)).collect();
        let a = kc.infer("[Char_1] bought a dog.", &rels, 5).unwrap();
        let b = kc.infer("[Char_1] bought a dog.", &rels, 5).unwrap();
        assert_eq!(a, b);
        for phrase in a.phrases() {
            assert!(phrase == "buy" || phrase == "dog", "{phrase}");
        }
        assert!(!a.is_empty());
    }

    #[test]
    fn recognizer_finds_names_and_legacy_tags() {
        let r = NameListRecognizer::builtin();
        let m: Vec<String> = r.mentions("Bob met Alice at the Park. [MALE] saw [FEMALE].").into_iter().map(|m| m.text).collect();
        assert_eq!(m, vec!["Bob", "Alice", "[MALE]", "[FEMALE]"]);
    }
}
