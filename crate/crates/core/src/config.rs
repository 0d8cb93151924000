//! Generation configuration and its validation.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::SamplingParams;
use crate::story::Mode;

/// A per-mode integer setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerMode {
    pub single: usize,
    pub multi: usize,
}

impl PerMode {
    pub fn get(&self, mode: Mode) -> usize {
        match mode {
            Mode::Single => self.single,
            Mode::Multi => self.multi,
        }
    }

    pub fn set(&mut self, mode: Mode, value: usize) {
        match mode {
            Mode::Single => self.single = value,
            Mode::Multi => self.multi = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct GenerationConfig {
    pub similarity_threshold: f64,
    pub required_matches: PerMode,
    pub relaxed_matches: PerMode,
    pub candidate_limit: usize,
    pub beam_width: usize,
    pub top_p: f64,
    pub temperature: f64,
    pub max_tokens_per_sentence: usize,
    /// Strength of the lexical bias; must stay below 1.
    pub mu: f64,
    /// Number of highest-probability tokens the lexical bias may touch.
    pub top_k: usize,
    pub decoding_control_enabled: bool,
    pub rho: f64,
    pub random_seed: u64,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.8,
            required_matches: PerMode { single: 3, multi: 3 },
            relaxed_matches: PerMode { single: 1, multi: 2 },
            candidate_limit: 50,
            beam_width: 5,
            top_p: 0.9,
            temperature: 1.0,
            max_tokens_per_sentence: 20,
            mu: 0.2,
            top_k: 100,
            decoding_control_enabled: true,
            rho: 1.0,
            random_seed: 0,
        }
    }
}

/// Rules available per mode; bounds `requiredMatches`.
const RULES_PER_MODE: PerMode = PerMode { single: 5, multi: 3 };

/// One broken invariant. `field` is the offending config key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigViolation {
    pub field: String,
    pub message: String,
}

impl ConfigViolation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { field: field.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl PartialEq<&str> for ConfigViolation {
    fn eq(&self, other: &&str) -> bool {
        self.message == *other
    }
}

/// Returns every violated invariant; empty when the config is usable.
pub fn validate_config(cfg: &GenerationConfig) -> Vec<ConfigViolation> {
    let mut out = Vec::new();
    if !(cfg.similarity_threshold > 0.0 && cfg.similarity_threshold <= 1.0) {
        out.push(ConfigViolation::new("similarityThreshold", "similarityThreshold must be in (0,1]"));
    }
    for mode in [Mode::Single, Mode::Multi] {
        let required = cfg.required_matches.get(mode);
        let relaxed = cfg.relaxed_matches.get(mode);
        if relaxed >= required {
            out.push(ConfigViolation::new(
                format!("relaxedMatches.{mode}"),
                "relaxedMatches must be < requiredMatches",
            ));
        }
        let available = RULES_PER_MODE.get(mode);
        if required > available {
            out.push(ConfigViolation::new(
                format!("requiredMatches.{mode}"),
                format!("requiredMatches.{mode} must be <= {available}"),
            ));
        }
    }
    if cfg.candidate_limit == 0 {
        out.push(ConfigViolation::new("candidateLimit", "candidateLimit must be >= 1"));
    }
    if cfg.beam_width == 0 {
        out.push(ConfigViolation::new("beamWidth", "beamWidth must be >= 1"));
    }
    if !(cfg.top_p > 0.0 && cfg.top_p <= 1.0) {
        out.push(ConfigViolation::new("topP", "topP must be in (0,1]"));
    }
    if !(cfg.temperature > 0.0 && cfg.temperature.is_finite()) {
        out.push(ConfigViolation::new("temperature", "temperature must be > 0"));
    }
    if cfg.max_tokens_per_sentence == 0 {
        out.push(ConfigViolation::new("maxTokensPerSentence", "maxTokensPerSentence must be >= 1"));
    }
    if !(cfg.mu >= 0.0 && cfg.mu < 1.0) {
        out.push(ConfigViolation::new("mu", "mu must be in [0,1)"));
    }
    if cfg.top_k == 0 {
        out.push(ConfigViolation::new("topK", "topK must be >= 1"));
    }
    if !(cfg.rho >= 0.0 && cfg.rho.is_finite()) {
        out.push(ConfigViolation::new("rho", "rho must be >= 0"));
    }
    out
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {}", .0.iter().map(|v| format!("{} ({})", v.message, v.field)).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<ConfigViolation>),
}

impl GenerationConfig {
    /// Loads a JSON (`.json`) or TOML (anything else) config file. Unknown
    /// keys are rejected; missing keys take their defaults.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        };
        parsed.map_err(|message| ConfigError::Parse { path: path.display().to_string(), message })
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn validated(self) -> Result<Self, ConfigError> {
        let violations = validate_config(&self);
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError::Invalid(violations))
        }
    }

    pub fn sampling_params(&self, seed: u64) -> SamplingParams {
        SamplingParams {
            top_p: self.top_p,
            temperature: self.temperature,
            max_tokens: self.max_tokens_per_sentence,
            seed,
        }
    }

    pub fn threshold_for(&self, mode: Mode, relaxed: bool) -> usize {
        if relaxed {
            self.relaxed_matches.get(mode)
        } else {
            self.required_matches.get(mode)
        }
    }
}
