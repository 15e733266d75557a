//! Glue shared by the command line and library callers: preparing pipeline
//! inputs from a dataset bundle and scoring predictions.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::hyperspace::ConfigSample;
use crate::pipeline::{fit_pipeline, produce_pipeline, ExecError, Probabilities, Registry, ValueEnvelope};
use crate::table::Table;
use crate::zoo::extract::{extract_frames, list_videos, ExtractError};
use crate::zoo::{build_standard_pipeline, BuildConfig, BuildError};

pub const VIDEO_EXTENSION: &str = "rawvid";

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("no .{ext} videos in {dir}")]
    NoVideos { dir: PathBuf, ext: String },
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error("pipeline output is not class probabilities")]
    NotProbabilities,
    #[error("table has no label column")]
    NoLabels,
}

/// Frame directories for every video under `media_dir`, extracting first
/// when any directory is missing.
pub fn prepare_frames(media_dir: &Path) -> Result<Vec<PathBuf>, WorkflowError> {
    let videos = list_videos(media_dir, VIDEO_EXTENSION)?;
    if videos.is_empty() {
        return Err(WorkflowError::NoVideos { dir: media_dir.to_path_buf(), ext: VIDEO_EXTENSION.into() });
    }
    let dirs: Vec<PathBuf> = videos.iter().map(|v| v.with_extension("")).collect();
    if dirs.iter().all(|d| d.is_dir()) {
        Ok(dirs)
    } else {
        Ok(extract_frames(media_dir, VIDEO_EXTENSION)?)
    }
}

/// The two inputs of the standard pipeline.
pub fn pipeline_inputs(table: &Table, frame_dirs: &[PathBuf]) -> Vec<ValueEnvelope> {
    vec![ValueEnvelope::Table(table.clone()), ValueEnvelope::PathList(frame_dirs.to_vec())]
}

/// Fraction of rows whose predicted label equals the table's label.
pub fn accuracy(probs: &Probabilities, table: &Table) -> Option<f64> {
    let labels = table.labels()?;
    if labels.is_empty() || labels.len() != probs.rows() {
        return None;
    }
    let hits = probs.predicted_labels().iter().zip(&labels).filter(|(p, l)| p == l).count();
    Some(hits as f64 / labels.len() as f64)
}

/// `d3mIndex,label` with the predicted class of every input row.
pub fn predictions_table(table: &Table, probs: &Probabilities) -> Table {
    let rows = table
        .row_ids()
        .into_iter()
        .zip(probs.predicted_labels())
        .map(|(id, label)| vec![id, label.to_string()])
        .collect();
    Table::new(vec!["d3mIndex".into(), "label".into()], rows, Some(1)).expect("two columns per row")
}

pub fn expect_probabilities(out: ValueEnvelope) -> Result<Probabilities, WorkflowError> {
    match out {
        ValueEnvelope::Probabilities(p) => Ok(p),
        _ => Err(WorkflowError::NotProbabilities),
    }
}

/// Validation accuracy of the standard pipeline built from `config`, fit on
/// the training table.
pub fn validation_accuracy(
    config: &BuildConfig,
    registry: &Registry,
    train: (&Table, &[PathBuf]),
    valid: (&Table, &[PathBuf]),
    seed: u64,
) -> Result<f64, WorkflowError> {
    let desc = build_standard_pipeline(config, registry)?;
    let fitted = fit_pipeline(&desc, &pipeline_inputs(train.0, train.1), registry, seed)?;
    let probs = expect_probabilities(produce_pipeline(&fitted, &pipeline_inputs(valid.0, valid.1), registry)?)?;
    accuracy(&probs, valid.0).ok_or(WorkflowError::NoLabels)
}

/// `base` with the entries of `config` layered on top of its overrides.
pub fn with_overrides(base: &BuildConfig, config: &ConfigSample) -> BuildConfig {
    let mut out = base.clone();
    for (k, v) in config.iter() {
        out.overrides.insert(k, v.clone());
    }
    out
}
