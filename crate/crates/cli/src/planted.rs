//! Synthetic corpora with known chaining rules, for checking that pair
//! mining recovers what was put in.
//!
//! For every adjacent sentence pair and every planted rule, one unique
//! nonsense phrase is placed in the context relation of the first sentence
//! and the continuation relation of the second. Every other relation gets
//! its own unique phrase, so only planted pairs ever share a phrase.

use std::collections::BTreeMap;

use cast_core::backends::mock::CommonsenseFixture;
use cast_core::relation::default_rules;
use cast_core::{PairRule, RelationType};

pub struct PlantedCorpus {
    pub stories: Vec<Vec<String>>,
    pub fixture: CommonsenseFixture,
    pub rules: Vec<PairRule>,
}

impl PlantedCorpus {
    /// Tab-separated corpus text, one story per line.
    pub fn corpus_text(&self) -> String {
        self.stories.iter().map(|s| s.join("\t") + "\n").collect()
    }

    pub fn fixture_json(&self) -> String {
        serde_json::to_string_pretty(&self.fixture).expect("fixture serializes")
    }

    pub fn is_planted(&self, context: &RelationType, continuation: &RelationType) -> bool {
        self.rules.iter().any(|r| &r.context_relation == context && &r.continuation_relation == continuation)
    }
}

/// A letters-only word unique to `n`. Ends in `x` so no inflection rule
/// applies to it.
fn nonce(n: usize) -> String {
    let mut n = n;
    let mut word = String::from("zq");
    loop {
        word.push((b'a' + (n % 26) as u8) as char);
        n /= 26;
        if n == 0 {
            break;
        }
    }
    word.push('x');
    word
}

/// Plants the default rules of both modes into `stories` stories of
/// `sentences` sentences, filling the rest of `relations` with noise.
pub fn planted_corpus(stories: usize, sentences: usize, relations: &[RelationType]) -> PlantedCorpus {
    let rules = default_rules();
    let mut counter = 0;
    let mut fresh = || {
        counter += 1;
        nonce(counter)
    };
    let mut fixture = CommonsenseFixture::new();
    let mut corpus = Vec::with_capacity(stories);
    for story in 0..stories {
        let lines: Vec<String> = (0..sentences).map(|i| format!("[Char_1] did step {} of {}.", nonce(i), nonce(story))).collect();
        let mut beams: Vec<BTreeMap<String, Vec<String>>> = vec![BTreeMap::new(); sentences];
        for i in 0..sentences.saturating_sub(1) {
            for rule in &rules {
                let phrase = fresh();
                beams[i].entry(rule.context_relation.name().to_string()).or_default().push(phrase.clone());
                beams[i + 1].entry(rule.continuation_relation.name().to_string()).or_default().push(phrase);
            }
        }
        for beam in beams.iter_mut() {
            for rel in relations {
                beam.entry(rel.name().to_string()).or_insert_with(|| vec![fresh()]);
            }
        }
        for (line, beam) in lines.iter().zip(beams) {
            fixture.insert(line.clone(), beam);
        }
        corpus.push(lines);
    }
    PlantedCorpus { stories: corpus, fixture, rules }
}
