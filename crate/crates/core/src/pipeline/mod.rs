//! The pipeline language: primitives, DAG descriptions, validation,
//! fit/produce execution and persistence.

mod artifact;
mod description;
mod envelope;
mod exec;
mod primitive;
mod validate;

pub use artifact::{decode_fitted, encode_fitted, load_fitted, save_fitted, write_atomic, ArtifactError, ARTIFACT_VERSION};
pub use description::{DataRef, DescriptionError, PipelineDescription, StepDescription, SCHEMA_VERSION};
pub use envelope::{FeatureMatrix, Probabilities, ValueEnvelope, ValueKind, ROW_SUM_TOLERANCE};
pub use exec::{fingerprint, fit_pipeline, fit_pipeline_traced, produce_pipeline, ExecError, ExecutionTrace, FittedPipeline};
pub use primitive::{
    HyperparamDescriptor, Hyperparams, Phase, Primitive, PrimitiveError, PrimitiveRef, PrimitiveRole, PrimitiveSpec,
    Registry, RegistryError, StepContext,
};
pub use validate::{bind_config, resolve_config_key, validate_pipeline, BindError, Issue, IssueCode, ValidationReport};

pub(crate) use artifact::Cursor;

/// Serializes a description to canonical JSON text.
pub fn serialize_pipeline(desc: &PipelineDescription) -> String {
    desc.to_canonical_json()
}

pub fn deserialize_pipeline(text: &str) -> Result<PipelineDescription, DescriptionError> {
    PipelineDescription::from_json(text)
}
