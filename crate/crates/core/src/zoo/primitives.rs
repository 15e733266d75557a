//! Built-in primitive implementations wired to the pipeline runtime.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;

use super::extract::read_frame_dir;
use super::mlp::{fit_classifier, fit_classifier_from, MlpModel, TrainHyperparams};
use super::pretrained::load_pretrained;
use super::video::{motion_features, normalize_frames, scale_frames, segment_sample, SegmentMode};
use crate::hyperspace::{ParamDomain, Value};
use crate::pipeline::{
    FeatureMatrix, HyperparamDescriptor, Hyperparams, Phase, Primitive, PrimitiveError, PrimitiveRef, PrimitiveRole,
    PrimitiveSpec, Probabilities, Registry, RegistryError, StepContext, ValueEnvelope, ValueKind,
};
use crate::pipeline::Cursor;

pub const ZOO_VERSION: &str = "0.1.0";
pub const FRAME_READER: &str = "zoo.frame_reader";
pub const SEGMENT_SAMPLE: &str = "zoo.segment_sample";
pub const SCALE_FRAMES: &str = "zoo.scale_frames";
pub const NORMALIZE_FRAMES: &str = "zoo.normalize_frames";
pub const MOTION_FEATURES: &str = "zoo.motion_features";
pub const MLP_CLASSIFIER: &str = "zoo.mlp_classifier";

/// Algorithm name of the built-in estimator.
pub const TOY_MLP: &str = "toy_mlp";

pub const DEFAULT_NORM_MEAN: f64 = 0.1;
pub const DEFAULT_NORM_STD: f64 = 0.1;
pub const DEFAULT_FRAME_SIZE: i64 = 16;

pub fn zoo_ref(name: &str) -> PrimitiveRef {
    PrimitiveRef::new(name, ZOO_VERSION)
}

fn domain(d: Result<ParamDomain, crate::hyperspace::HyperError>) -> ParamDomain {
    d.expect("built-in domains are well formed")
}

fn spec(
    id: &str,
    role: PrimitiveRole,
    input_kinds: Vec<ValueKind>,
    output_kind: ValueKind,
    hyperparams: Vec<HyperparamDescriptor>,
) -> PrimitiveSpec {
    PrimitiveSpec {
        id: id.to_string(),
        version: ZOO_VERSION.to_string(),
        role,
        input_kinds,
        output_kind,
        hyperparams,
        requires_fit: role == PrimitiveRole::Estimator,
    }
}

fn bad_input(msg: impl Into<String>) -> PrimitiveError {
    PrimitiveError::BadInput(msg.into())
}

/// Registers the six built-in primitives and the `toy_mlp` algorithm.
pub fn register_builtins(registry: &mut Registry) -> Result<(), RegistryError> {
    registry.register(
        spec(
            FRAME_READER,
            PrimitiveRole::Loader,
            vec![ValueKind::Table, ValueKind::PathList],
            ValueKind::RawFrames,
            vec![HyperparamDescriptor::new("video_column", ParamDomain::Text, "video")],
        ),
        Arc::new(FrameReader),
    )?;
    registry.register(
        spec(
            SEGMENT_SAMPLE,
            PrimitiveRole::Transformer,
            vec![ValueKind::RawFrames],
            ValueKind::RawFrames,
            vec![HyperparamDescriptor::new("num_segments", domain(ParamDomain::choice([8i64, 16, 32])), 16i64).tunable()],
        ),
        Arc::new(SegmentSampler),
    )?;
    registry.register(
        spec(
            SCALE_FRAMES,
            PrimitiveRole::Transformer,
            vec![ValueKind::RawFrames],
            ValueKind::RawFrames,
            vec![
                HyperparamDescriptor::new("out_height", domain(ParamDomain::uniform(1.0, 4096.0)), DEFAULT_FRAME_SIZE),
                HyperparamDescriptor::new("out_width", domain(ParamDomain::uniform(1.0, 4096.0)), DEFAULT_FRAME_SIZE),
            ],
        ),
        Arc::new(FrameScaler),
    )?;
    registry.register(
        spec(
            NORMALIZE_FRAMES,
            PrimitiveRole::Transformer,
            vec![ValueKind::RawFrames],
            ValueKind::TensorFrames,
            vec![
                HyperparamDescriptor::new("mean", domain(ParamDomain::uniform(0.0, 1.0)), DEFAULT_NORM_MEAN),
                HyperparamDescriptor::new("std", domain(ParamDomain::uniform(1e-3, 10.0)), DEFAULT_NORM_STD),
            ],
        ),
        Arc::new(Normalizer),
    )?;
    registry.register(
        spec(
            MOTION_FEATURES,
            PrimitiveRole::Transformer,
            vec![ValueKind::TensorFrames],
            ValueKind::FeatureMatrix,
            vec![],
        ),
        Arc::new(MotionFeatures),
    )?;
    registry.register(classifier_spec(MLP_CLASSIFIER), Arc::new(MlpClassifier))?;
    registry.register_algorithm(TOY_MLP, zoo_ref(MLP_CLASSIFIER))?;
    Ok(())
}

/// A registry holding only the built-ins.
pub fn builtin_registry() -> Registry {
    let mut r = Registry::new();
    register_builtins(&mut r).expect("built-ins register cleanly");
    r
}

/// Spec shared by classifier estimators: features plus the annotation table
/// in, class probabilities out.
pub fn classifier_spec(id: &str) -> PrimitiveSpec {
    let d = TrainHyperparams::default();
    spec(
        id,
        PrimitiveRole::Estimator,
        vec![ValueKind::FeatureMatrix, ValueKind::Table],
        ValueKind::Probabilities,
        vec![
            HyperparamDescriptor::new("learning_rate", domain(ParamDomain::log_uniform(1e-4, 1e-3)), d.learning_rate)
                .tunable(),
            HyperparamDescriptor::new("momentum", domain(ParamDomain::uniform(0.9, 0.99)), d.momentum).tunable(),
            HyperparamDescriptor::new("weight_decay", domain(ParamDomain::log_uniform(5e-4, 1e-3)), d.weight_decay)
                .tunable(),
            HyperparamDescriptor::new("epochs", domain(ParamDomain::uniform(0.0, 10_000.0)), d.epochs as i64),
            HyperparamDescriptor::new(
                "milestones",
                ParamDomain::constant(Value::List(d.milestones.iter().map(|&m| Value::Int(m as i64)).collect())),
                Value::List(d.milestones.iter().map(|&m| Value::Int(m as i64)).collect()),
            ),
            HyperparamDescriptor::new("decay_factor", domain(ParamDomain::uniform(1.0, 1000.0)), d.decay_factor),
            HyperparamDescriptor::new("batch_size", domain(ParamDomain::uniform(1.0, 1e6)), d.batch_size as i64),
            HyperparamDescriptor::new("dropout", domain(ParamDomain::uniform(0.0, 0.95)), d.dropout),
            HyperparamDescriptor::new("hidden_units", domain(ParamDomain::uniform(1.0, 4096.0)), d.hidden_units as i64),
            HyperparamDescriptor::new("pretrained_path", ParamDomain::Text, ""),
        ],
    )
}

/// Reads the training schedule out of resolved classifier hyperparameters.
/// Milestones at or beyond `epochs` are dropped.
pub fn train_hyperparams(hp: &Hyperparams) -> Result<TrainHyperparams, PrimitiveError> {
    let epochs = hp.usize("epochs")?;
    let milestones = hp.usize_list("milestones")?.into_iter().filter(|&m| m < epochs).collect();
    let out = TrainHyperparams {
        epochs,
        learning_rate: hp.f64("learning_rate")?,
        milestones,
        decay_factor: hp.f64("decay_factor")?,
        weight_decay: hp.f64("weight_decay")?,
        batch_size: hp.usize("batch_size")?,
        momentum: hp.f64("momentum")?,
        num_segments: TrainHyperparams::default().num_segments,
        dropout: hp.f64("dropout")?,
        hidden_units: hp.usize("hidden_units")?,
    };
    out.validate().map_err(|e| PrimitiveError::Hyperparam(e.to_string()))?;
    Ok(out)
}

struct FrameReader;

fn locate_frames(dirs: &[PathBuf], stem: &str) -> Option<PathBuf> {
    dirs.iter()
        .find(|d| d.file_name().is_some_and(|n| n == stem) && d.is_dir())
        .cloned()
        .or_else(|| dirs.iter().map(|d| d.join(stem)).find(|p| p.is_dir()))
}

impl Primitive for FrameReader {
    fn produce(
        &self,
        hp: &Hyperparams,
        _state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let (ValueEnvelope::Table(table), ValueEnvelope::PathList(dirs)) = (inputs[0], inputs[1]) else {
            return Err(bad_input("expected (Table, PathList)"));
        };
        let column_name = hp.str("video_column")?;
        let column = table
            .column_index(column_name)
            .ok_or_else(|| bad_input(format!("table has no `{column_name}` column")))?;
        let mut clips = Vec::with_capacity(table.len());
        for video in table.column(column) {
            let stem = Path::new(video)
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| bad_input(format!("bad video name {video:?}")))?;
            let dir = locate_frames(dirs, stem)
                .ok_or_else(|| bad_input(format!("no extracted frames for {video:?}")))?;
            clips.push(read_frame_dir(&dir).map_err(PrimitiveError::other)?);
        }
        Ok(ValueEnvelope::RawFrames(clips))
    }
}

struct SegmentSampler;

impl Primitive for SegmentSampler {
    fn produce(
        &self,
        hp: &Hyperparams,
        _state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let ValueEnvelope::RawFrames(clips) = inputs[0] else {
            return Err(bad_input("expected RawFrames"));
        };
        let n = hp.usize("num_segments")?;
        let mode = match ctx.phase {
            Phase::Fit => SegmentMode::TrainRandom,
            Phase::Produce => SegmentMode::EvalCenter,
        };
        let out = clips
            .iter()
            .map(|c| segment_sample(c, n, mode, &mut ctx.rng))
            .collect::<Result<Vec<_>, _>>()
            .map_err(PrimitiveError::other)?;
        Ok(ValueEnvelope::RawFrames(out))
    }
}

struct FrameScaler;

impl Primitive for FrameScaler {
    fn produce(
        &self,
        hp: &Hyperparams,
        _state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let ValueEnvelope::RawFrames(clips) = inputs[0] else {
            return Err(bad_input("expected RawFrames"));
        };
        let (h, w) = (hp.usize("out_height")?, hp.usize("out_width")?);
        let out = clips
            .iter()
            .map(|c| scale_frames(c, h, w))
            .collect::<Result<Vec<_>, _>>()
            .map_err(PrimitiveError::other)?;
        Ok(ValueEnvelope::RawFrames(out))
    }
}

struct Normalizer;

impl Primitive for Normalizer {
    fn produce(
        &self,
        hp: &Hyperparams,
        _state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let ValueEnvelope::RawFrames(clips) = inputs[0] else {
            return Err(bad_input("expected RawFrames"));
        };
        let (mean, std) = (hp.f64("mean")?, hp.f64("std")?);
        let out = clips
            .iter()
            .map(|c| normalize_frames(c, &vec![mean; c.channels()], &vec![std; c.channels()]))
            .collect::<Result<Vec<_>, _>>()
            .map_err(PrimitiveError::other)?;
        Ok(ValueEnvelope::TensorFrames(out))
    }
}

struct MotionFeatures;

impl Primitive for MotionFeatures {
    fn produce(
        &self,
        _hp: &Hyperparams,
        _state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let ValueEnvelope::TensorFrames(clips) = inputs[0] else {
            return Err(bad_input("expected TensorFrames"));
        };
        let rows: Vec<Vec<f64>> = clips.iter().map(motion_features).collect();
        let matrix = FeatureMatrix::from_rows(&rows).map_err(|e| bad_input(format!("clips differ in shape: {e}")))?;
        Ok(ValueEnvelope::FeatureMatrix(matrix))
    }
}

/// Learned state of the classifier: class names plus model weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    pub classes: Vec<String>,
    pub model: MlpModel,
}

impl ClassifierState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.classes.len() as u32).to_le_bytes());
        for c in &self.classes {
            out.extend_from_slice(&(c.len() as u32).to_le_bytes());
            out.extend_from_slice(c.as_bytes());
        }
        out.extend_from_slice(&self.model.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PrimitiveError> {
        let bad = || PrimitiveError::State("truncated classifier state".into());
        let mut cur = Cursor::new(bytes);
        let n = cur.u32().ok_or_else(bad)? as usize;
        let mut classes = Vec::with_capacity(n.min(1024));
        for _ in 0..n {
            let len = cur.u32().ok_or_else(bad)? as usize;
            let raw = cur.take(len).ok_or_else(bad)?;
            classes.push(String::from_utf8(raw.to_vec()).map_err(|_| PrimitiveError::State("class name is not UTF-8".into()))?);
        }
        let rest = cur.take(cur.remaining()).expect("remaining bytes");
        let model = MlpModel::from_bytes(rest).map_err(|e| PrimitiveError::State(e.to_string()))?;
        if model.classes != classes.len() {
            return Err(PrimitiveError::State("class count disagrees with model".into()));
        }
        Ok(Self { classes, model })
    }
}

struct MlpClassifier;

impl Primitive for MlpClassifier {
    fn fit(
        &self,
        hp: &Hyperparams,
        inputs: &[&ValueEnvelope],
        ctx: &mut StepContext,
    ) -> Result<Vec<u8>, PrimitiveError> {
        let (ValueEnvelope::FeatureMatrix(x), ValueEnvelope::Table(table)) = (inputs[0], inputs[1]) else {
            return Err(bad_input("expected (FeatureMatrix, Table)"));
        };
        let labels = table.labels().ok_or_else(|| bad_input("training table has no target column"))?;
        if labels.len() != x.rows() {
            return Err(bad_input(format!("{} labels for {} feature rows", labels.len(), x.rows())));
        }
        let mut classes: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        classes.sort();
        classes.dedup();
        let y: Vec<usize> = labels
            .iter()
            .map(|l| classes.binary_search_by(|c| c.as_str().cmp(l)).expect("label is a class"))
            .collect();
        let train = train_hyperparams(hp)?;
        let seed: u64 = ctx.rng.random();
        let pretrained = hp.str("pretrained_path")?;
        let trained = if pretrained.is_empty() {
            fit_classifier(x.data(), &y, classes.len(), &train, seed)
        } else {
            let init = load_pretrained(Path::new(pretrained)).map_err(PrimitiveError::other)?;
            if (init.inputs, init.classes) != (x.cols(), classes.len()) {
                return Err(PrimitiveError::State(format!(
                    "pretrained model is {}->{}, data needs {}->{}",
                    init.inputs,
                    init.classes,
                    x.cols(),
                    classes.len()
                )));
            }
            fit_classifier_from(init, x.data(), &y, &train, seed)
        }
        .map_err(PrimitiveError::other)?;
        Ok(ClassifierState { classes, model: trained.model }.to_bytes())
    }

    fn produce(
        &self,
        _hp: &Hyperparams,
        state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError> {
        let ValueEnvelope::FeatureMatrix(x) = inputs[0] else {
            return Err(bad_input("expected FeatureMatrix"));
        };
        let state = ClassifierState::from_bytes(state.ok_or_else(|| PrimitiveError::State("classifier is not fitted".into()))?)?;
        let probs = state.model.predict_proba(x.data()).map_err(PrimitiveError::other)?;
        let matrix = FeatureMatrix::new(x.rows(), state.classes.len(), probs).map_err(bad_input)?;
        let p = Probabilities::new(state.classes, matrix).map_err(bad_input)?;
        Ok(ValueEnvelope::Probabilities(p))
    }
}
