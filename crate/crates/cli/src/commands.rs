//! The subcommands. Each is a thin wrapper over the matching core
//! operation that handles files, overrides and output records.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use cast_core::backends::mock::NameListRecognizer;
use cast_core::backends::Backends;
use cast_core::corpus::{
    build_prefix_training_pairs, label_rl_pairs, mine_pair_rules, parse_corpus, parse_pairs, preprocess_names, rl_loss,
    rl_penalty, LabeledPair, MinedPairStat, TrainingPair,
};
use cast_core::diagnostics::{diagnose, render_table, DiagnosticRow};
use cast_core::pipeline::{generate_story, substitute_in};
use cast_core::relation::RelationInventory;
use cast_core::tag::distinct_tags;
use cast_core::{CharacterTag, GenerationConfig, GenerationTelemetry, Mode, NameMap};

use crate::{
    build_backends, config_hash, effective_config, input_error, read_text, CliError, CommonArgs, DiagnoseArgs,
    FinetuneArgs, GenerateArgs, LabelArgs, MineArgs, PreprocessArgs, RecordWriter,
};

/// One generated story, or the reason it failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StoryRecord {
    pub prompt: String,
    pub mode: Mode,
    pub sentences: Vec<String>,
    pub subjects: Vec<Option<CharacterTag>>,
    pub name_map: NameMap,
    pub telemetry: GenerationTelemetry,
    /// The story with names substituted where a mapping exists.
    pub rendered: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MinedRecord {
    pub rank: usize,
    #[serde(flatten)]
    pub stat: MinedPairStat,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub pair: LabeledPair,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rl_loss: Option<f64>,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TrainingRecord {
    /// 1-based corpus line of the source story.
    pub line: usize,
    #[serde(flatten)]
    pub pair: TrainingPair,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TaggedStoryRecord {
    pub line: usize,
    pub sentences: Vec<String>,
    pub name_map: NameMap,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticRecord {
    #[serde(flatten)]
    pub row: DiagnosticRow,
    pub stories: usize,
    pub failed: usize,
}

pub fn cmd_generate(common: &CommonArgs, args: &GenerateArgs) -> Result<(), CliError> {
    let cfg = effective_config(common, |c| {
        if args.no_decoding_control {
            c.decoding_control_enabled = false;
        }
    })?;
    if args.length == 0 {
        return Err(CliError::Input("--length must be >= 1".into()));
    }
    let mut prompts = args.prompt.clone();
    if let Some(path) = &args.prompt_file {
        prompts.extend(read_text(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(String::from));
    }
    if prompts.is_empty() {
        return Err(CliError::Input("no prompts: pass --prompt or --prompt-file".into()));
    }
    let names: NameMap = match &args.names {
        Some(path) => serde_json::from_str(&read_text(path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => NameMap::new(),
    };
    let backends = build_backends(common)?;
    let hash = config_hash(&cfg, &json!({ "command": "generate", "mode": args.mode, "length": args.length }));
    let records: Vec<StoryRecord> = prompts
        .par_iter()
        .map(|p| generate_record(p, args.mode, args.length, &names, &cfg, &backends, &hash))
        .collect();
    let mut out = RecordWriter::open(common.out.as_deref())?;
    let mut failed = 0;
    for r in &records {
        if let Some(e) = &r.error {
            log::error!("prompt {:?}: {e}", r.prompt);
            failed += 1;
        }
        out.write(r)?;
    }
    out.finish()?;
    if failed > 0 {
        return Err(CliError::Partial(format!("{failed} of {} stories failed", records.len())));
    }
    Ok(())
}

/// Tags raw names in `prompt`, picks the mode and generates. Failures are
/// folded into the record.
pub fn generate_record(
    prompt: &str,
    mode: Option<Mode>,
    length: usize,
    names: &NameMap,
    cfg: &GenerationConfig,
    backends: &Backends,
    hash: &str,
) -> StoryRecord {
    let (tagged, mut name_map) = if distinct_tags(prompt).is_empty() {
        let (mut tagged, found) = preprocess_names(&[prompt.to_string()], &NameListRecognizer::builtin());
        (tagged.remove(0), found)
    } else {
        (prompt.to_string(), NameMap::new())
    };
    name_map.extend(names.iter().map(|(k, v)| (*k, v.clone())));
    let mode = mode.unwrap_or(if distinct_tags(&tagged).len() >= 2 { Mode::Multi } else { Mode::Single });
    let mut record = StoryRecord {
        prompt: prompt.to_string(),
        mode,
        sentences: Vec::new(),
        subjects: Vec::new(),
        name_map: name_map.clone(),
        telemetry: GenerationTelemetry::default(),
        rendered: String::new(),
        error: None,
        config_hash: hash.to_string(),
        seed: cfg.random_seed,
    };
    match generate_story(&tagged, mode, length, cfg, backends, name_map) {
        Ok(state) => {
            record.sentences = state.sentences().iter().map(|s| s.text().to_string()).collect();
            record.subjects = state.subjects();
            record.rendered = render(&state.history(), &state.name_map);
            record.telemetry = state.telemetry;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Substitutes names when every tag is mapped; otherwise keeps the tags.
fn render(text: &str, names: &NameMap) -> String {
    if names.is_empty() {
        return text.to_string();
    }
    substitute_in(text, names).unwrap_or_else(|e| {
        log::warn!("{e}; keeping tags");
        text.to_string()
    })
}

/// Stories with their 1-based source lines. Accepts tab-separated text or
/// records carrying a `sentences` array (as written by `preprocess`).
pub fn read_stories(path: &Path) -> Result<Vec<(usize, Vec<String>)>, CliError> {
    let text = read_text(path)?;
    let located = |line: usize, e: &dyn std::fmt::Display| CliError::Input(format!("{}: line {line}: {e}", path.display()));
    if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct WithSentences {
            sentences: Vec<String>,
        }
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: WithSentences = serde_json::from_str(line).map_err(|e| located(i + 1, &e))?;
            if rec.sentences.is_empty() {
                return Err(located(i + 1, &"story has no sentences"));
            }
            out.push((i + 1, rec.sentences));
        }
        if out.is_empty() {
            return Err(CliError::Input(format!("{}: corpus is empty", path.display())));
        }
        return Ok(out);
    }
    let stories = parse_corpus(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, _)| i + 1);
    Ok(lines.zip(stories).collect())
}

pub fn cmd_mine_pairs(common: &CommonArgs, args: &MineArgs) -> Result<(), CliError> {
    let cfg = effective_config(common, |_| {})?;
    if !(args.threshold > 0.0 && args.threshold <= 1.0) {
        return Err(CliError::Input("--threshold must be in (0,1]".into()));
    }
    if args.beam == 0 {
        return Err(CliError::Input("--beam must be >= 1".into()));
    }
    let stories: Vec<Vec<String>> = read_stories(&args.corpus)?.into_iter().map(|(_, s)| s).collect();
    let stories = sample_stories(stories, args.sample, cfg.random_seed);
    let inventory = match &args.relations {
        Some(path) => RelationInventory::parse(&read_text(path)?),
        None => RelationInventory::builtin(),
    };
    if inventory.is_empty() {
        return Err(CliError::Input("relation inventory is empty".into()));
    }
    let backends = build_backends(common)?;
    let stats = mine_pair_rules(
        &stories,
        backends.commonsense.as_ref(),
        backends.encoder.as_ref(),
        inventory.relations(),
        args.threshold,
        args.beam,
    )
    .map_err(input_error)?;
    let hash = config_hash(
        &cfg,
        &json!({
            "command": "mine-pairs",
            "sample": args.sample,
            "beam": args.beam,
            "threshold": args.threshold,
            "relations": inventory.relations(),
        }),
    );
    let mut out = RecordWriter::open(common.out.as_deref())?;
    for (i, stat) in stats.into_iter().enumerate() {
        out.write(&MinedRecord { rank: i + 1, stat, config_hash: hash.clone(), seed: cfg.random_seed })?;
    }
    out.finish()
}

/// A seeded sample of `n` stories in corpus order; everything when `n` is
/// absent or exceeds the corpus.
pub fn sample_stories(stories: Vec<Vec<String>>, n: Option<usize>, seed: u64) -> Vec<Vec<String>> {
    let Some(n) = n else { return stories };
    if n >= stories.len() {
        if n > stories.len() {
            log::warn!("--sample {n} exceeds corpus of {} stories; using all", stories.len());
        }
        return stories;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep: HashSet<usize> = sample(&mut rng, stories.len(), n).into_iter().collect();
    stories.into_iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, s)| s).collect()
}

pub fn cmd_label_rl(common: &CommonArgs, args: &LabelArgs) -> Result<(), CliError> {
    let cfg = effective_config(common, |_| {})?;
    if args.loss.is_some_and(|l| !(l >= 0.0 && l.is_finite())) {
        return Err(CliError::Input("--loss must be a non-negative number".into()));
    }
    let text = read_text(&args.pairs)?;
    let pairs = parse_pairs(&text).map_err(|e| CliError::Input(format!("{}: {e}", args.pairs.display())))?;
    let backends = build_backends(common)?;
    let labeled = label_rl_pairs(&pairs, args.mode, &cfg, &backends).map_err(input_error)?;
    let hash = config_hash(
        &cfg,
        &json!({ "command": "label-rl", "mode": args.mode, "loss": args.loss, "iteration": args.iteration }),
    );
    let mut out = RecordWriter::open(common.out.as_deref())?;
    for pair in labeled {
        let penalty = args.loss.map(|l| rl_penalty(l, pair.label, cfg.rho, args.iteration));
        let total = args.loss.zip(penalty).map(|(l, u)| rl_loss(l, u));
        out.write(&LabeledRecord { pair, penalty, rl_loss: total, config_hash: hash.clone(), seed: cfg.random_seed })?;
    }
    out.finish()
}

pub fn cmd_build_finetune_data(common: &CommonArgs, args: &FinetuneArgs) -> Result<(), CliError> {
    let cfg = effective_config(common, |_| {})?;
    let stories = read_stories(&args.corpus)?;
    let backends = build_backends(common)?;
    let hash = config_hash(&cfg, &json!({ "command": "build-finetune-data" }));
    let mut out = RecordWriter::open(common.out.as_deref())?;
    for (line, story) in stories {
        for pair in build_prefix_training_pairs(&story, backends.parser.as_ref()) {
            out.write(&TrainingRecord { line, pair, config_hash: hash.clone(), seed: cfg.random_seed })?;
        }
    }
    out.finish()
}

pub fn cmd_preprocess(common: &CommonArgs, args: &PreprocessArgs) -> Result<(), CliError> {
    let cfg = effective_config(common, |_| {})?;
    let stories = read_stories(&args.corpus)?;
    let mut recognizer = NameListRecognizer::builtin();
    if let Some(path) = &args.names_list {
        let extra = read_text(path)?;
        let extra = extra.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        recognizer = recognizer.with_names(extra);
    }
    let hash = config_hash(&cfg, &json!({ "command": "preprocess", "namesList": args.names_list }));
    let mut out = RecordWriter::open(common.out.as_deref())?;
    for (line, story) in stories {
        let (sentences, name_map) = preprocess_names(&story, &recognizer);
        out.write(&TaggedStoryRecord { line, sentences, name_map, config_hash: hash.clone(), seed: cfg.random_seed })?;
    }
    out.finish()
}

pub fn cmd_diagnose(common: &CommonArgs, args: &DiagnoseArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for input in &args.inputs {
        let (setting, path) = match input.split_once('=') {
            Some((s, p)) => (s.to_string(), Path::new(p)),
            None => {
                let p = Path::new(input.as_str());
                (p.file_stem().map_or_else(|| input.clone(), |s| s.to_string_lossy().into_owned()), p)
            }
        };
        rows.push(diagnose_file(&setting, path)?);
    }
    print!("{}", render_table(&rows.iter().map(|r| r.row.clone()).collect::<Vec<_>>()));
    if let Some(path) = &common.out {
        let mut out = RecordWriter::open(Some(path))?;
        for r in &rows {
            out.write(r)?;
        }
        out.finish()?;
    }
    Ok(())
}

/// Reads one `generate` output file. Failed stories are counted but not
/// summarized.
pub fn diagnose_file(setting: &str, path: &Path) -> Result<DiagnosticRecord, CliError> {
    let text = read_text(path)?;
    let mut telemetry = Vec::new();
    let mut stories = Vec::new();
    let mut failed = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: StoryRecord = serde_json::from_str(line)
            .map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if rec.error.is_some() {
            failed += 1;
            continue;
        }
        stories.push(rec.sentences.join(" "));
        telemetry.push(rec.telemetry);
    }
    let row = diagnose(setting, &telemetry, &stories).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(DiagnosticRecord { row, stories: stories.len(), failed })
}
