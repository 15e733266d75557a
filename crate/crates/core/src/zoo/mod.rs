//! Built-in primitives and the standard video classification pipeline.

pub mod extract;
pub mod mlp;
pub mod pretrained;
pub mod primitives;
pub mod video;

use thiserror::Error;

pub use crate::table::load_annotations;
pub use extract::{extract_frames, read_frame_dir, ExtractError};
pub use mlp::{
    fit_classifier, fit_classifier_from, lr_at_epoch, sgd_step, DropoutMode, MlpError, MlpModel, TrainHyperparams,
    TrainedClassifier,
};
pub use pretrained::{load_pretrained, save_pretrained, PretrainedError};
pub use primitives::{builtin_registry, classifier_spec, register_builtins, ClassifierState, TOY_MLP};
pub use video::{motion_features, normalize_frames, scale_frames, segment_indices, segment_sample, SegmentMode};

use crate::hyperspace::{ConfigSample, Value};
use crate::pipeline::{bind_config, BindError, DataRef, PipelineDescription, Registry, StepDescription};
use primitives::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("unknown algorithm `{0}`")]
    UnknownAlgorithm(String),
    #[error("load_pretrained is set but no pretrained_path was given")]
    MissingPretrainedPath,
    #[error(transparent)]
    Bind(#[from] BindError),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildConfig {
    pub algorithm: String,
    pub load_pretrained: bool,
    pub pretrained_path: Option<String>,
    pub overrides: ConfigSample,
}

impl BuildConfig {
    pub fn new(algorithm: impl Into<String>) -> Self {
        Self { algorithm: algorithm.into(), ..Self::default() }
    }
}

/// Index of the classifier step in the standard pipeline.
pub const CLASSIFIER_STEP: usize = 5;

/// frame_reader, segment_sample, scale_frames, normalize_frames,
/// motion_features, classifier. Inputs are the annotation table and the
/// list of extracted frame directories.
pub fn build_standard_pipeline(config: &BuildConfig, registry: &Registry) -> Result<PipelineDescription, BuildError> {
    let classifier = registry
        .algorithm(&config.algorithm)
        .cloned()
        .ok_or_else(|| BuildError::UnknownAlgorithm(config.algorithm.clone()))?;
    let pretrained = match (config.load_pretrained, &config.pretrained_path) {
        (false, _) => None,
        (true, Some(p)) if !p.is_empty() => Some(p.clone()),
        (true, _) => return Err(BuildError::MissingPretrainedPath),
    };

    let d = TrainHyperparams::default();
    let mut head = StepDescription::new(classifier, vec![DataRef::Step(4), DataRef::Input(0)])
        .bind("learning_rate", d.learning_rate)
        .bind("momentum", d.momentum)
        .bind("weight_decay", d.weight_decay)
        .bind("epochs", d.epochs as i64)
        .bind("milestones", Value::List(d.milestones.iter().map(|&m| Value::Int(m as i64)).collect()))
        .bind("decay_factor", d.decay_factor)
        .bind("batch_size", d.batch_size as i64)
        .bind("dropout", d.dropout);
    if let Some(p) = pretrained {
        head = head.bind("pretrained_path", p);
    }
    let steps = vec![
        StepDescription::new(zoo_ref(FRAME_READER), vec![DataRef::Input(0), DataRef::Input(1)]),
        StepDescription::new(zoo_ref(SEGMENT_SAMPLE), vec![DataRef::Step(0)]).bind("num_segments", d.num_segments as i64),
        StepDescription::new(zoo_ref(SCALE_FRAMES), vec![DataRef::Step(1)])
            .bind("out_height", DEFAULT_FRAME_SIZE)
            .bind("out_width", DEFAULT_FRAME_SIZE),
        StepDescription::new(zoo_ref(NORMALIZE_FRAMES), vec![DataRef::Step(2)])
            .bind("mean", DEFAULT_NORM_MEAN)
            .bind("std", DEFAULT_NORM_STD),
        StepDescription::new(zoo_ref(MOTION_FEATURES), vec![DataRef::Step(3)]),
        head,
    ];
    let base = PipelineDescription::new(2, steps, DataRef::Step(CLASSIFIER_STEP));
    let mut bound = bind_config(&base, &config.overrides, registry)?;
    bound.pipeline_id = bound.content_id();
    Ok(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::validate_pipeline;

    #[test]
    fn default_pipeline_shape() {
        let reg = builtin_registry();
        let p = build_standard_pipeline(&BuildConfig::new("toy_mlp"), &reg).unwrap();
        assert_eq!(p.steps.len(), 6);
        assert_eq!(p.steps[1].bindings["num_segments"], Value::Int(16));
        assert!(validate_pipeline(&p, &reg).ok(), "{}", validate_pipeline(&p, &reg));
    }

    #[test]
    fn unknown_algorithm() {
        let reg = builtin_registry();
        assert_eq!(
            build_standard_pipeline(&BuildConfig::new("i3d"), &reg),
            Err(BuildError::UnknownAlgorithm("i3d".into()))
        );
    }

    #[test]
    fn pretrained_requires_path() {
        let reg = builtin_registry();
        let cfg = BuildConfig { load_pretrained: true, ..BuildConfig::new("toy_mlp") };
        assert_eq!(build_standard_pipeline(&cfg, &reg), Err(BuildError::MissingPretrainedPath));
    }

    #[test]
    fn overrides_change_id() {
        let reg = builtin_registry();
        let a = build_standard_pipeline(&BuildConfig::new("toy_mlp"), &reg).unwrap();
        let cfg = BuildConfig {
            overrides: ConfigSample::new().with("num_segments", 8i64).with("learning_rate", 5e-4),
            ..BuildConfig::new("toy_mlp")
        };
        let b = build_standard_pipeline(&cfg, &reg).unwrap();
        assert_eq!(b.steps[1].bindings["num_segments"], Value::Int(8));
        assert_ne!(a.pipeline_id, b.pipeline_id);
    }
}
