//! Character tags: placeholder tokens such as `[Char_1]` that stand in for
//! proper names throughout the corpus and the generated stories.

use std::fmt;
use std::num::NonZeroU32;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("not a character tag: {0:?}")]
pub struct TagParseError(pub String);

/// A character placeholder, rendered as `[Char_<index>]` with `index >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharacterTag(NonZeroU32);

impl CharacterTag {
    /// Returns `None` for index 0.
    pub fn new(index: u32) -> Option<Self> {
        NonZeroU32::new(index).map(Self)
    }

    /// Panics on 0. For literals in code and tests.
    pub const fn of(index: u32) -> Self {
        match NonZeroU32::new(index) {
            Some(n) => Self(n),
            None => panic!("character tag index must be >= 1"),
        }
    }

    pub fn index(self) -> u32 {
        self.0.get()
    }

    pub fn render(self) -> String {
        render_tag(self)
    }
}

/// `[Char_<index>]`.
pub fn render_tag(tag: CharacterTag) -> String {
    format!("[Char_{}]", tag.index())
}

fn tag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[Char_([1-9][0-9]*)\]").expect("valid tag regex"))
}

/// Every tag occurrence in `text`, as `(byte_start, byte_end, tag)`, in order.
pub fn find_tags(text: &str) -> Vec<(usize, usize, CharacterTag)> {
    tag_regex()
        .captures_iter(text)
        .filter_map(|cap| {
            let whole = cap.get(0)?;
            let index: u32 = cap[1].parse().ok()?;
            Some((whole.start(), whole.end(), CharacterTag::new(index)?))
        })
        .collect()
}

/// Distinct tags in order of first appearance.
pub fn distinct_tags(text: &str) -> Vec<CharacterTag> {
    let mut seen = Vec::new();
    for (_, _, tag) in find_tags(text) {
        if !seen.contains(&tag) {
            seen.push(tag);
        }
    }
    seen
}

impl fmt::Display for CharacterTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[Char_{}]", self.index())
    }
}

impl FromStr for CharacterTag {
    type Err = TagParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .strip_prefix("[Char_")
            .and_then(|rest| rest.strip_suffix(']'))
            .ok_or_else(|| TagParseError(s.to_string()))?;
        if inner.is_empty() || inner.starts_with('0') || !inner.bytes().all(|b| b.is_ascii_digit()) {
            return Err(TagParseError(s.to_string()));
        }
        inner
            .parse::<u32>()
            .ok()
            .and_then(CharacterTag::new)
            .ok_or_else(|| TagParseError(s.to_string()))
    }
}

impl Serialize for CharacterTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CharacterTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
