//! Diversity and search-effort diagnostics over generated stories.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::story::GenerationTelemetry;
use crate::text::split_tokens;

/// Stand-in for a zero clipped n-gram count.
pub const BLEU_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiagnosticsError {
    #[error("self-BLEU needs at least 2 stories, got {0}")]
    TooFewStories(usize),
    #[error("n-gram order must be at least 1")]
    InvalidOrder,
    #[error("no sentence telemetry to summarize")]
    NoSentences,
}

/// Lowercased word and punctuation tokens.
pub fn bleu_tokens(text: &str) -> Vec<String> {
    split_tokens(text).into_iter().map(|t| t.to_lowercase()).collect()
}

fn ngram_counts(tokens: &[String], k: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(k) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence BLEU of `hypothesis` against `references`: uniform weights
/// over orders 1..=n, clipped counts, and a brevity penalty against the
/// closest reference length (shorter wins ties). Orders longer than the
/// hypothesis are dropped and the weights spread over the rest.
pub fn sentence_bleu(hypothesis: &[String], references: &[Vec<String>], n: usize) -> f64 {
    let n = n.min(hypothesis.len());
    if n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for k in 1..=n {
        let hyp = ngram_counts(hypothesis, k);
        let refs: Vec<_> = references.iter().map(|r| ngram_counts(r, k)).collect();
        let total: usize = hyp.values().sum();
        let clipped: usize = hyp
            .iter()
            .map(|(gram, c)| {
                let max_ref = refs.iter().map(|r| r.get(gram).copied().unwrap_or(0)).max().unwrap_or(0);
                (*c).min(max_ref)
            })
            .sum();
        let precision = if clipped == 0 || total == 0 { BLEU_EPSILON } else { clipped as f64 / total as f64 };
        log_sum += precision.ln() / n as f64;
    }
    let c = hypothesis.len();
    let r = references
        .iter()
        .map(Vec::len)
        .min_by_key(|len| (len.abs_diff(c), *len))
        .unwrap_or(0);
    let brevity = if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };
    brevity * log_sum.exp()
}

/// Mean over stories of each story's BLEU against all the others.
pub fn self_bleu(stories: &[String], n: usize) -> Result<f64, DiagnosticsError> {
    if stories.len() < 2 {
        return Err(DiagnosticsError::TooFewStories(stories.len()));
    }
    if n == 0 {
        return Err(DiagnosticsError::InvalidOrder);
    }
    let tokens: Vec<Vec<String>> = stories.iter().map(|s| bleu_tokens(s)).collect();
    let total: f64 = (0..tokens.len())
        .map(|i| {
            let refs: Vec<Vec<String>> = tokens.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, t)| t.clone()).collect();
            sentence_bleu(&tokens[i], &refs, n)
        })
        .sum();
    Ok(total / tokens.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TelemetrySummary {
    pub mean_candidates: f64,
    /// Share of sentences accepted without relaxation.
    pub success_rate: f64,
    pub sentences: usize,
}

/// Pools per-sentence telemetry across records; records without
/// sentences contribute nothing.
pub fn summarize_telemetry(records: &[GenerationTelemetry]) -> Result<TelemetrySummary, DiagnosticsError> {
    let sentences: Vec<_> = records.iter().flat_map(|r| &r.per_sentence).collect();
    if sentences.is_empty() {
        return Err(DiagnosticsError::NoSentences);
    }
    let n = sentences.len() as f64;
    let candidates: usize = sentences.iter().map(|s| s.candidates_tried).sum();
    let strict = sentences.iter().filter(|s| !s.relaxation_used).count();
    Ok(TelemetrySummary { mean_candidates: candidates as f64 / n, success_rate: strict as f64 / n, sentences: sentences.len() })
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticRow {
    pub setting: String,
    pub mean_candidates: f64,
    pub success_rate: f64,
    pub self_bleu_2: Option<f64>,
    pub self_bleu_3: Option<f64>,
}

/// Summarizes one setting. Self-BLEU is omitted with fewer than 2 stories.
pub fn diagnose(setting: &str, records: &[GenerationTelemetry], stories: &[String]) -> Result<DiagnosticRow, DiagnosticsError> {
    let summary = summarize_telemetry(records)?;
    Ok(DiagnosticRow {
        setting: setting.to_string(),
        mean_candidates: summary.mean_candidates,
        success_rate: summary.success_rate,
        self_bleu_2: self_bleu(stories, 2).ok(),
        self_bleu_3: self_bleu(stories, 3).ok(),
    })
}

/// Fixed-width table: setting, mean candidates, success rate, self-BLEU-2,
/// self-BLEU-3.
pub fn render_table(rows: &[DiagnosticRow]) -> String {
    let width = rows.iter().map(|r| r.setting.len()).chain(["Setting".len()]).max().unwrap_or(7);
    let bleu = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"));
    let mut out = String::new();
    let _ = writeln!(out, "{:<width$} | {:>10} | {:>12} | {:>11} | {:>11}", "Setting", "Candidates", "Success rate", "Self-BLEU-2", "Self-BLEU-3");
    let _ = writeln!(out, "{}", "-".repeat(width + 57));
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$} | {:>10.2} | {:>11.2}% | {:>11} | {:>11}",
            r.setting,
            r.mean_candidates,
            r.success_rate * 100.0,
            bleu(r.self_bleu_2),
            bleu(r.self_bleu_3)
        );
    }
    out
}
