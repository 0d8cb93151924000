//! Rule-based lexical resources: an English inflection table and a
//! thesaurus of synonym/antonym entries.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use super::{BackendError, Lexicon, Morphology};

const BUILTIN_VERBS: &str = include_str!("../../data/verbs.tsv");
const BUILTIN_NOUNS: &str = include_str!("../../data/nouns.tsv");
const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.tsv");

const DETERMINERS: [&str; 11] = ["the", "his", "her", "my", "their", "our", "your", "its", "this", "that", "some"];
const MAX_EXPANSIONS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    Verb,
    Noun,
}

/// Inflected forms of one verb: base, third person, past, participle, gerund.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbForms {
    pub base: String,
    pub third: String,
    pub past: String,
    pub participle: String,
    pub gerund: String,
}

impl VerbForms {
    pub fn all(&self) -> [&str; 5] {
        [&self.base, &self.third, &self.past, &self.participle, &self.gerund]
    }
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u')
}

fn consonant_y(word: &str) -> bool {
    let mut rev = word.chars().rev();
    matches!((rev.next(), rev.next()), (Some('y'), Some(c)) if !is_vowel(c))
}

fn regular_third(base: &str) -> String {
    if consonant_y(base) {
        format!("{}ies", &base[..base.len() - 1])
    } else if ["s", "x", "z", "ch", "sh", "o"].iter().any(|s| base.ends_with(s)) {
        format!("{base}es")
    } else {
        format!("{base}s")
    }
}

fn regular_past(base: &str) -> String {
    if base.ends_with('e') {
        format!("{base}d")
    } else if consonant_y(base) {
        format!("{}ied", &base[..base.len() - 1])
    } else {
        format!("{base}ed")
    }
}

fn regular_gerund(base: &str) -> String {
    if let Some(stem) = base.strip_suffix("ie") {
        format!("{stem}ying")
    } else if base.ends_with('e') && !base.ends_with("ee") && base.len() > 2 {
        format!("{}ing", &base[..base.len() - 1])
    } else {
        format!("{base}ing")
    }
}

/// Plural by the usual English suffix rules; `-o` nouns take `-s`.
pub fn regular_plural(noun: &str) -> String {
    if noun.ends_with('o') {
        format!("{noun}s")
    } else {
        regular_third(noun)
    }
}

fn column<'a>(cols: &[&'a str], i: usize) -> Option<&'a str> {
    cols.get(i).map(|s| s.trim()).filter(|s| !s.is_empty() && *s != "-")
}

/// Verb conjugation and noun number from word tables.
///
/// Phrases are expanded as the product of per-word alternatives: the
/// first known verb takes all its conjugations, nouns take singular,
/// plural, and (without another determiner) indefinite-article forms.
/// Other words pass through unchanged.
#[derive(Debug, Clone)]
pub struct RuleMorphology {
    verbs: HashMap<String, VerbForms>,
    nouns: HashMap<String, (String, String)>,
    verb_lemma: HashMap<String, String>,
    noun_lemma: HashMap<String, String>,
}

impl RuleMorphology {
    pub fn parse(verbs: &str, nouns: &str) -> Self {
        let mut m = Self {
            verbs: HashMap::new(),
            nouns: HashMap::new(),
            verb_lemma: HashMap::new(),
            noun_lemma: HashMap::new(),
        };
        for line in verbs.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            let base = cols[0].trim().to_lowercase();
            let past = column(&cols, 2).map(str::to_string).unwrap_or_else(|| regular_past(&base));
            let forms = VerbForms {
                third: column(&cols, 1).map(str::to_string).unwrap_or_else(|| regular_third(&base)),
                participle: column(&cols, 3).map(str::to_string).unwrap_or_else(|| past.clone()),
                gerund: column(&cols, 4).map(str::to_string).unwrap_or_else(|| regular_gerund(&base)),
                past,
                base: base.clone(),
            };
            for f in forms.all() {
                m.verb_lemma.entry(f.to_string()).or_insert_with(|| base.clone());
            }
            m.verbs.insert(base, forms);
        }
        for line in nouns.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            let sing = cols[0].trim().to_lowercase();
            let plural = column(&cols, 1).map(str::to_string).unwrap_or_else(|| regular_plural(&sing));
            m.noun_lemma.entry(sing.clone()).or_insert_with(|| sing.clone());
            m.noun_lemma.entry(plural.clone()).or_insert_with(|| sing.clone());
            m.nouns.insert(sing.clone(), (sing, plural));
        }
        m
    }

    pub fn builtin() -> Arc<Self> {
        static M: OnceLock<Arc<RuleMorphology>> = OnceLock::new();
        M.get_or_init(|| Arc::new(Self::parse(BUILTIN_VERBS, BUILTIN_NOUNS))).clone()
    }

    pub fn verb_forms(&self, word: &str) -> Option<&VerbForms> {
        self.verb_lemma.get(word).and_then(|l| self.verbs.get(l))
    }

    pub fn noun_forms(&self, word: &str) -> Option<(&str, &str)> {
        self.noun_lemma
            .get(word)
            .and_then(|l| self.nouns.get(l))
            .map(|(s, p)| (s.as_str(), p.as_str()))
    }

    /// Dictionary form, preferring the verb reading.
    pub fn lemma(&self, word: &str) -> Option<(&str, Pos)> {
        if let Some(l) = self.verb_lemma.get(word) {
            return Some((l.as_str(), Pos::Verb));
        }
        self.noun_lemma.get(word).map(|l| (l.as_str(), Pos::Noun))
    }

    /// True for third-person or past forms of a known verb.
    pub fn is_finite_form(&self, word: &str) -> bool {
        self.verb_forms(word).is_some_and(|f| word == f.third || word == f.past)
    }

    pub fn is_base_verb(&self, word: &str) -> bool {
        self.verbs.contains_key(word)
    }

    pub fn is_noun(&self, word: &str) -> bool {
        self.noun_lemma.contains_key(word)
    }

    fn noun_alternatives(&self, word: &str, allow_article: bool) -> Vec<String> {
        let (sing, plural) = self.noun_forms(word).expect("caller checked noun");
        let mut alts = vec![sing.to_string(), plural.to_string()];
        if allow_article {
            let article = if sing.starts_with(is_vowel) { "an" } else { "a" };
            alts.push(format!("{article} {sing}"));
        }
        alts
    }
}

impl Morphology for RuleMorphology {
    fn expand(&self, phrase: &str) -> BTreeSet<String> {
        let lowered = phrase.to_lowercase();
        let words: Vec<&str> = lowered.split_whitespace().collect();
        let mut slots: Vec<Vec<String>> = Vec::new();
        let mut seen_verb = false;
        let mut i = 0;
        while i < words.len() {
            let w = words[i];
            let prev = i.checked_sub(1).map(|j| words[j]);
            let after_determiner = prev.is_some_and(|p| DETERMINERS.contains(&p));
            if matches!(w, "a" | "an") && words.get(i + 1).is_some_and(|n| self.is_noun(n)) {
                slots.push(self.noun_alternatives(words[i + 1], true));
                i += 2;
                continue;
            }
            let as_verb = !seen_verb && !after_determiner && self.verb_forms(w).is_some();
            if as_verb {
                seen_verb = true;
                let forms = self.verb_forms(w).expect("checked");
                slots.push(forms.all().iter().map(|s| s.to_string()).collect());
            } else if self.is_noun(w) {
                slots.push(self.noun_alternatives(w, !after_determiner));
            } else {
                slots.push(vec![w.to_string()]);
            }
            i += 1;
        }
        let mut out: Vec<String> = vec![String::new()];
        for slot in &slots {
            let mut next = Vec::with_capacity(out.len() * slot.len());
            for prefix in &out {
                for alt in slot {
                    next.push(if prefix.is_empty() { alt.clone() } else { format!("{prefix} {alt}") });
                }
            }
            next.truncate(MAX_EXPANSIONS);
            out = next;
        }
        let mut set: BTreeSet<String> = out.into_iter().filter(|s| !s.is_empty()).collect();
        if !words.is_empty() {
            set.insert(words.join(" "));
        }
        set
    }
}

#[derive(Debug, Clone, Default)]
struct Entry {
    synonyms: Vec<String>,
    antonyms: Vec<String>,
}

/// Synonym/antonym lookup by headword substitution.
///
/// Each entry maps a headword (possibly several words, e.g. `go to`) to
/// synonym and antonym replacements. A phrase's synonyms are the phrase
/// itself plus every single-headword substitution; antonyms likewise,
/// minus anything already a synonym. Longest headword wins at each
/// position.
#[derive(Debug, Clone, Default)]
pub struct ThesaurusLexicon {
    entries: HashMap<Vec<String>, Entry>,
    longest: usize,
}

impl ThesaurusLexicon {
    /// Lines of `headword<TAB>syn|syn<TAB>ant|ant`; `#` comments.
    pub fn parse(text: &str) -> Self {
        let mut lex = Self::default();
        let split = |s: Option<&&str>| -> Vec<String> {
            s.map(|s| s.split('|').map(|p| p.trim().to_lowercase()).filter(|p| !p.is_empty()).collect())
                .unwrap_or_default()
        };
        for line in text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            let head: Vec<String> = cols[0].split_whitespace().map(str::to_lowercase).collect();
            if head.is_empty() {
                continue;
            }
            lex.longest = lex.longest.max(head.len());
            let entry = lex.entries.entry(head).or_default();
            entry.synonyms.extend(split(cols.get(1)));
            entry.antonyms.extend(split(cols.get(2)));
        }
        lex
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON)
    }

    /// Fails with `ResourceMissing` when the file is absent.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| BackendError::ResourceMissing(format!("{}: {e}", path.display())))
    }

    fn substitutions(&self, phrase: &str, pick: impl Fn(&Entry) -> &[String]) -> BTreeSet<String> {
        let words: Vec<String> = phrase.split_whitespace().map(str::to_lowercase).collect();
        let mut out = BTreeSet::new();
        let mut i = 0;
        while i < words.len() {
            let mut matched = 0;
            for len in (1..=self.longest.min(words.len() - i)).rev() {
                if let Some(entry) = self.entries.get(&words[i..i + len]) {
                    for replacement in pick(entry) {
                        let mut v: Vec<&str> = words[..i].iter().map(String::as_str).collect();
                        v.push(replacement);
                        v.extend(words[i + len..].iter().map(String::as_str));
                        out.insert(v.join(" "));
                    }
                    matched = len;
                    break;
                }
            }
            i += matched.max(1);
        }
        out
    }
}

impl Lexicon for ThesaurusLexicon {
    fn synonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        let mut out = self.substitutions(phrase, |e| &e.synonyms);
        let normalized = phrase.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        if !normalized.is_empty() {
            out.insert(normalized);
        }
        Ok(out)
    }

    fn antonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        let synonyms = self.synonyms(phrase)?;
        Ok(self
            .substitutions(phrase, |e| &e.antonyms)
            .into_iter()
            .filter(|a| !synonyms.contains(a))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn regular_rules() {
        assert_eq!(regular_third("carry"), "carries");
        assert_eq!(regular_third("watch"), "watches");
        assert_eq!(regular_past("smile"), "smiled");
        assert_eq!(regular_past("try"), "tried");
        assert_eq!(regular_past("play"), "played");
        assert_eq!(regular_gerund("hike"), "hiking");
        assert_eq!(regular_gerund("see"), "seeing");
        assert_eq!(regular_plural("beach"), "beaches");
        assert_eq!(regular_plural("party"), "parties");
        assert_eq!(regular_plural("toy"), "toys");
        assert_eq!(regular_plural("piano"), "pianos");
    }

    #[test]
    fn buy_dog_expansion() {
        let m = RuleMorphology::builtin();
        let out = m.expand("buy dog");
        for want in ["buy dog", "buy dogs", "buy a dog", "buys a dog", "bought a dog"] {
            assert!(out.contains(want), "missing {want}: {out:?}");
        }
    }

    #[test]
    fn unknown_word_is_identity() {
        assert_eq!(RuleMorphology::builtin().expand("zzqx"), set(&["zzqx"]));
    }

    #[test]
    fn expansion_is_closed_on_buy_dog() {
        let m = RuleMorphology::builtin();
        let first = m.expand("buy dog");
        let mut second = BTreeSet::new();
        for member in &first {
            second.extend(m.expand(member));
        }
        assert_eq!(first, second);
    }

    #[test]
    fn determiner_blocks_article() {
        let out = RuleMorphology::builtin().expand("walk the dog");
        assert!(out.contains("walked the dogs"));
        assert!(!out.iter().any(|s| s.contains("the a dog")));
    }

    #[test]
    fn lemmas_and_finite_forms() {
        let m = RuleMorphology::builtin();
        assert_eq!(m.lemma("sleeping"), Some(("sleep", Pos::Verb)));
        assert_eq!(m.lemma("went"), Some(("go", Pos::Verb)));
        assert_eq!(m.lemma("dogs"), Some(("dog", Pos::Noun)));
        assert!(m.is_finite_form("apologized"));
        assert!(m.is_finite_form("gives"));
        assert!(!m.is_finite_form("give"));
    }

    #[test]
    fn go_to_beach_lexicon() {
        let lex = ThesaurusLexicon::builtin();
        let syn = lex.synonyms("go to beach").unwrap();
        let ant = lex.antonyms("go to beach").unwrap();
        assert!(syn.is_superset(&set(&["move to beach", "go to beach"])), "{syn:?}");
        assert!(ant.contains("leave beach"), "{ant:?}");
        assert!(syn.is_disjoint(&ant));
    }

    #[test]
    fn unknown_phrase_falls_back_to_identity() {
        let lex = ThesaurusLexicon::builtin();
        assert_eq!(lex.synonyms("zzqx").unwrap(), set(&["zzqx"]));
        assert!(lex.antonyms("zzqx").unwrap().is_empty());
    }

    #[test]
    fn antonym_equal_to_synonym_is_dropped() {
        let lex = ThesaurusLexicon::parse("calm\tpeaceful\tpeaceful|angry\n");
        assert_eq!(lex.antonyms("calm").unwrap(), set(&["angry"]));
    }

    #[test]
    fn missing_file_is_resource_missing() {
        let err = ThesaurusLexicon::load(Path::new("/nonexistent/lexicon.tsv")).unwrap_err();
        assert!(matches!(err, BackendError::ResourceMissing(_)));
    }
}
