//! Story generation that chains commonsense inferences between sentences.
//!
//! Each new sentence is sampled from a language model, run through a
//! commonsense inference model, and kept only when its inferred
//! preconditions semantically match the previous sentence's inferred
//! postconditions. Every model sits behind a trait in [`backends`].
//!
//! ```
//! use cast_core::backends::mock::mock_backends;
//! use cast_core::pipeline::generate_story;
//! use cast_core::{GenerationConfig, Mode, NameMap};
//!
//! let story = generate_story(
//!     "[Char_1] gave [Char_2] a burger.",
//!     Mode::Multi,
//!     3,
//!     &GenerationConfig::default(),
//!     &mock_backends(),
//!     NameMap::new(),
//! )
//! .unwrap();
//! assert_eq!(story.len(), 3);
//! ```

pub mod backends;
pub mod config;
pub mod corpus;
pub mod decoding;
pub mod diagnostics;
pub mod matching;
pub mod pipeline;
pub mod relation;
pub mod story;
pub mod tag;
pub mod text;

pub use config::{validate_config, GenerationConfig, PerMode};
pub use relation::{PairRule, RelationType};
pub use story::{
    GenerationTelemetry, InferenceSet, MatchVerdict, Mode, NameMap, PairMatchResult, SentenceTelemetry, StorySentence,
    StoryState,
};
pub use tag::CharacterTag;
