//! Batch workflows over `cast_core`: story generation, pair-rule mining,
//! reward labeling, fine-tuning data, name preprocessing and diagnostics.
//!
//! Every command reads a single config file (optional), applies
//! command-line overrides, and writes line-delimited JSON records that
//! embed the hash of the effective config and the seed.

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use cast_core::backends::mock::{mock_backends_with, FixtureCommonsense};
use cast_core::backends::remote::remote_backends;
use cast_core::backends::Backends;
use cast_core::{GenerationConfig, Mode};

pub mod commands;
pub mod planted;

/// Exit status for full success.
pub const EXIT_OK: i32 = 0;
/// Some records failed; the rest were written.
pub const EXIT_PARTIAL: i32 = 1;
/// Bad config, arguments or input files.
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Input(String),
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Partial(_) => EXIT_PARTIAL,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Partial(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

pub fn input_error(e: impl fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "cast", version, about = "Commonsense-chained story generation")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Generation config (JSON or TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Use the deterministic mock backends.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Address of a line-delimited JSON backend server.
    #[arg(long, global = true, value_name = "HOST:PORT")]
    pub backend: Option<String>,
    /// Commonsense fixture consulted before the mock inference model.
    #[arg(long, global = true, value_name = "PATH")]
    pub fixtures: Option<PathBuf>,
    /// Overrides the config's random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one story per prompt.
    Generate(GenerateArgs),
    /// Rank relation pairs by how often they chain across adjacent sentences.
    MinePairs(MineArgs),
    /// Label sentence pairs for reward fine-tuning.
    LabelRl(LabelArgs),
    /// Build subject-prefixed fine-tuning pairs from a tagged corpus.
    BuildFinetuneData(FinetuneArgs),
    /// Replace character names with tags.
    Preprocess(PreprocessArgs),
    /// Summarize generation output files into a table.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// Prompt sentence; may be repeated.
    #[arg(long)]
    pub prompt: Vec<String>,
    /// File with one prompt per line.
    #[arg(long, value_name = "PATH")]
    pub prompt_file: Option<PathBuf>,
    /// single or multi; inferred from the number of characters when omitted.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// Sentences per story, prompt included.
    #[arg(long, default_value_t = 5)]
    pub length: usize,
    /// JSON object mapping tags to names, e.g. {"[Char_1]": "Bob"}.
    #[arg(long, value_name = "PATH")]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub no_decoding_control: bool,
}

#[derive(Debug, Clone, Args)]
pub struct MineArgs {
    /// Stories, tab-separated sentences per line (or preprocess output).
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Number of stories sampled with the seed; all when omitted.
    #[arg(long)]
    pub sample: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub beam: usize,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    /// Relation inventory, one name per line; built-in list when omitted.
    #[arg(long, value_name = "PATH")]
    pub relations: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Sentence pairs, two tab-separated sentences per line.
    #[arg(long, value_name = "PATH")]
    pub pairs: PathBuf,
    #[arg(long, default_value = "single")]
    pub mode: Mode,
    /// Language-model loss of each pair's target; adds penalty and total loss.
    #[arg(long)]
    pub loss: Option<f64>,
    /// Training iteration for the penalty schedule.
    #[arg(long, default_value_t = 0)]
    pub iteration: u32,
}

#[derive(Debug, Clone, Args)]
pub struct FinetuneArgs {
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PreprocessArgs {
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Extra first names, one per line.
    #[arg(long, value_name = "PATH")]
    pub names_list: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    /// Generation output, as PATH or SETTING=PATH; may be repeated.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<String>,
}

/// Parses `args` and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Generate(a) => commands::cmd_generate(c, a),
        Command::MinePairs(a) => commands::cmd_mine_pairs(c, a),
        Command::LabelRl(a) => commands::cmd_label_rl(c, a),
        Command::BuildFinetuneData(a) => commands::cmd_build_finetune_data(c, a),
        Command::Preprocess(a) => commands::cmd_preprocess(c, a),
        Command::Diagnose(a) => commands::cmd_diagnose(c, a),
    }
}

/// Loads the config file (or defaults), applies the seed override and
/// validates.
pub fn effective_config(common: &CommonArgs, edit: impl FnOnce(&mut GenerationConfig)) -> Result<GenerationConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => GenerationConfig::load(path).map_err(input_error)?,
        None => GenerationConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.random_seed = seed;
    }
    edit(&mut cfg);
    cfg.validated().map_err(input_error)
}

/// First 16 hex digits of the SHA-256 of the config and any
/// command-specific parameters, serialized as JSON.
pub fn config_hash(cfg: &GenerationConfig, params: &Value) -> String {
    let canonical = serde_json::json!({ "config": cfg, "params": params });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn build_backends(common: &CommonArgs) -> Result<Backends, CliError> {
    let fixture = match &common.fixtures {
        Some(path) => Some(FixtureCommonsense::load(path).map_err(input_error)?),
        None => None,
    };
    match (&common.backend, common.mock) {
        (_, true) => Ok(mock_backends_with(fixture)),
        (Some(addr), false) => {
            if fixture.is_some() {
                return Err(CliError::Input("--fixtures requires --mock".into()));
            }
            remote_backends(addr).map_err(|e| CliError::Input(format!("backend {addr} unreachable: {e}")))
        }
        (None, false) => Err(CliError::Input("no backends: pass --mock or --backend HOST:PORT".into())),
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// Writes serialized records, one per line.
pub struct RecordWriter {
    inner: Box<dyn Write>,
}

impl RecordWriter {
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::Input(format!("cannot create {}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self { inner })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<(), CliError> {
        let line = serde_json::to_string(record).map_err(input_error)?;
        writeln!(self.inner, "{line}").map_err(input_error)
    }

    pub fn write_raw(&mut self, text: &str) -> Result<(), CliError> {
        self.inner.write_all(text.as_bytes()).map_err(input_error)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush().map_err(input_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_tracks_overrides() {
        let cfg = GenerationConfig::default();
        let off = GenerationConfig { decoding_control_enabled: false, ..Default::default() };
        let p = serde_json::json!({});
        assert_eq!(config_hash(&cfg, &p), config_hash(&cfg.clone(), &p));
        assert_ne!(config_hash(&cfg, &p), config_hash(&off, &p));
        assert_ne!(config_hash(&cfg, &p), config_hash(&cfg, &serde_json::json!({"beam": 10})));
        assert_eq!(config_hash(&cfg, &p).len(), 16);
    }

    #[test]
    fn seed_override_applies() {
        let common = CommonArgs { seed: Some(42), ..Default::default() };
        assert_eq!(effective_config(&common, |_| {}).unwrap().random_seed, 42);
    }

    #[test]
    fn invalid_override_is_input_error() {
        let err = effective_config(&CommonArgs::default(), |c| c.mu = 1.5).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INPUT);
        assert!(err.to_string().contains("mu must be in [0,1)"));
    }

    #[test]
    fn backends_need_a_source() {
        assert_eq!(build_backends(&CommonArgs::default()).err().unwrap().exit_code(), EXIT_INPUT);
        assert!(build_backends(&CommonArgs { mock: true, ..Default::default() }).is_ok());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(main_with_args(["cast", "generate", "--mode", "triple"]), EXIT_INPUT);
        assert_eq!(main_with_args(["cast", "--help"]), EXIT_OK);
    }
}
