//! Heuristic subject detection for tagged sentences.

use std::sync::Arc;

use super::lexical::RuleMorphology;
use super::SubjectParser;
use crate::tag::CharacterTag;
use crate::text::split_tokens;

const AUXILIARIES: [&str; 20] = [
    "was", "were", "is", "are", "am", "has", "had", "have", "did", "does", "do", "will", "would", "can", "could",
    "should", "might", "must", "may", "shall",
];

/// Picks the first character tag that appears before the first finite
/// verb. With no finite verb found, the first tag in the sentence.
///
/// Finite verbs are auxiliaries, third-person or past forms from the
/// inflection table, unknown words ending in `-ed`, and a base-form verb
/// directly after a tag (`[Char_1] and [Char_2] go`).
#[derive(Debug, Clone)]
pub struct HeuristicSubjectParser {
    morphology: Arc<RuleMorphology>,
}

impl HeuristicSubjectParser {
    pub fn new(morphology: Arc<RuleMorphology>) -> Self {
        Self { morphology }
    }

    fn is_finite(&self, word: &str, after_tag: bool) -> bool {
        let w = word.to_lowercase();
        if AUXILIARIES.contains(&w.as_str()) || self.morphology.is_finite_form(&w) {
            return true;
        }
        if after_tag && self.morphology.is_base_verb(&w) {
            return true;
        }
        w.len() > 4 && w.ends_with("ed") && !self.morphology.is_noun(&w) && w.chars().all(|c| c.is_alphabetic())
    }
}

impl Default for HeuristicSubjectParser {
    fn default() -> Self {
        Self::new(RuleMorphology::builtin())
    }
}

impl SubjectParser for HeuristicSubjectParser {
    fn subject_of(&self, sentence: &str) -> Option<CharacterTag> {
        let mut first_tag = None;
        let mut prev_was_tag = false;
        for tok in split_tokens(sentence) {
            if let Ok(tag) = tok.parse::<CharacterTag>() {
                first_tag.get_or_insert(tag);
                prev_was_tag = true;
                continue;
            }
            if tok.chars().next().is_some_and(char::is_alphabetic) && self.is_finite(&tok, prev_was_tag) {
                return first_tag;
            }
            prev_was_tag = false;
        }
        first_tag
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn subject(s: &str) -> Option<u32> {
        HeuristicSubjectParser::default().subject_of(s).map(CharacterTag::index)
    }

    #[test]
    fn tag_after_adverbial_is_subject() {
        assert_eq!(subject("Because of this, [Char_2] apologized."), Some(2));
    }

    #[test]
    fn first_tag_before_auxiliary() {
        assert_eq!(subject("[Char_1] was upset with [Char_2]."), Some(1));
        assert_eq!(subject("[Char_1] gives [Char_2] a burger"), Some(1));
    }

    #[test]
    fn no_tag_no_subject() {
        assert_eq!(subject("It rained all day."), None);
    }

    #[test]
    fn object_tag_is_not_subject() {
        assert_eq!(subject("She gave [Char_1] a gift."), None);
        assert_eq!(subject("The dog bit [Char_2]."), None);
    }

    #[test]
    fn base_verb_after_tag_counts() {
        assert_eq!(subject("Then [Char_2] and [Char_1] go home."), Some(2));
    }

    #[test]
    fn unknown_ed_verb() {
        assert_eq!(subject("Later, [Char_2] zorbled [Char_1]."), Some(2));
    }
}
