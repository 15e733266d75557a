use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use autovid::hyperspace::{ConfigSample, Value};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ALGORITHM: &str = "toy_mlp";
pub const DEFAULT_STRATEGY: &str = "tpe";
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_VALID_FRACTION: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(name = "autovid", version, about = "Video classification pipelines with hyperparameter search")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic moving-square dataset and split it.
    Synth(SynthArgs),
    /// Build the standard pipeline, fit it, and save the fitted artifact.
    Fit(FitArgs),
    /// Run a fitted artifact and write predictions.
    Produce(ProduceArgs),
    /// Search hyperparameters against a validation set.
    Search(SearchArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Annotation CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Directory holding the .rawvid clips.
    #[arg(long)]
    pub media: Option<PathBuf>,
    /// Column index of the label.
    #[arg(long)]
    pub target_index: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file of defaults; flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    #[arg(long, default_value_t = 25)]
    pub videos_per_class: usize,
    #[arg(long, default_value_t = 32)]
    pub frames: usize,
    #[arg(long, default_value_t = 32)]
    pub height: usize,
    #[arg(long, default_value_t = 32)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub channels: usize,
    #[arg(long, default_value_t = 8.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = DEFAULT_VALID_FRACTION)]
    pub valid_fraction: f64,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Initial classifier weights.
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    /// Also write the trained classifier weights here.
    #[arg(long)]
    pub save_weights: Option<PathBuf>,
    /// Hyperparameter override, `name=value` or `<step>.name=value`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ProduceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Fitted pipeline artifact.
    #[arg(long)]
    pub fitted: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub algorithm: Option<String>,
    /// random or tpe.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Search space JSON; the default AutoVideo space when omitted.
    #[arg(long)]
    pub space: Option<PathBuf>,
    #[arg(long)]
    pub valid_table: Option<PathBuf>,
    /// Defaults to --media.
    #[arg(long)]
    pub valid_media: Option<PathBuf>,
    /// Trial log (JSONL).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Contents of a `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub table: Option<PathBuf>,
    pub media: Option<PathBuf>,
    pub target_index: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub algorithm: Option<String>,
    pub pretrained: Option<PathBuf>,
    pub save_weights: Option<PathBuf>,
    pub fitted: Option<PathBuf>,
    pub strategy: Option<String>,
    pub trials: Option<usize>,
    pub space: Option<PathBuf>,
    pub valid_table: Option<PathBuf>,
    pub valid_media: Option<PathBuf>,
    pub log: Option<PathBuf>,
    #[serde(default)]
    pub set: BTreeMap<String, Value>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad config {}: {e}", path.display())))
    }
}

/// Paths and settings shared by fit, produce and search after merging.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub table: PathBuf,
    pub media: PathBuf,
    pub target_index: Option<usize>,
    pub seed: u64,
    pub out: PathBuf,
}

pub fn missing(flag: &str) -> CliError {
    CliError::Usage(format!("missing required option --{flag}"))
}

impl Common {
    pub fn resolve(&self, file: &FileConfig, need_target: bool) -> Result<Resolved, CliError> {
        let table = self.table.clone().or_else(|| file.table.clone()).ok_or_else(|| missing("table"))?;
        let media = self.media.clone().or_else(|| file.media.clone()).ok_or_else(|| missing("media"))?;
        let target_index = self.target_index.or(file.target_index);
        if need_target && target_index.is_none() {
            return Err(missing("target-index"));
        }
        let out = self.out.clone().or_else(|| file.out.clone()).ok_or_else(|| missing("out"))?;
        Ok(Resolved { table, media, target_index, seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED), out })
    }
}

/// `key=value`; the value is read as JSON when it parses, else as a string.
pub fn parse_set(item: &str) -> Result<(String, Value), CliError> {
    let (k, v) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
    if k.is_empty() {
        return Err(CliError::Config(format!("--set has an empty key in {item:?}")));
    }
    let value = serde_json::from_str::<Value>(v).unwrap_or_else(|_| Value::Str(v.to_string()));
    Ok((k.to_string(), value))
}

/// File `set` entries first, then flags, later keys winning.
pub fn overrides(file: &FileConfig, flags: &[String]) -> Result<ConfigSample, CliError> {
    let mut out = ConfigSample::new();
    for (k, v) in &file.set {
        out.insert(k.clone(), v.clone());
    }
    for item in flags {
        let (k, v) = parse_set(item)?;
        out.insert(k, v);
    }
    Ok(out)
}
