use std::collections::BTreeMap;
use std::error::Error as StdError;
use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::envelope::{ValueEnvelope, ValueKind};
use crate::hyperspace::{ParamDomain, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveRole {
    Loader,
    Transformer,
    Estimator,
}

/// `(name, version)` key of a registered primitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimitiveRef {
    pub name: String,
    pub version: String,
}

impl PrimitiveRef {
    pub fn new(name: impl Into<String>, version: impl Into<String>) -> Self {
        Self { name: name.into(), version: version.into() }
    }
}

impl fmt::Display for PrimitiveRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.version)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperparamDescriptor {
    pub name: String,
    pub domain: ParamDomain,
    pub default: Value,
    pub tunable: bool,
}

impl HyperparamDescriptor {
    pub fn new(name: impl Into<String>, domain: ParamDomain, default: impl Into<Value>) -> Self {
        Self { name: name.into(), domain, default: default.into(), tunable: false }
    }

    pub fn tunable(mut self) -> Self {
        self.tunable = true;
        self
    }
}

/// Declared metadata of a primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveSpec {
    pub id: String,
    pub version: String,
    pub role: PrimitiveRole,
    pub input_kinds: Vec<ValueKind>,
    pub output_kind: ValueKind,
    pub hyperparams: Vec<HyperparamDescriptor>,
    pub requires_fit: bool,
}

impl PrimitiveSpec {
    pub fn key(&self) -> PrimitiveRef {
        PrimitiveRef::new(&self.id, &self.version)
    }

    pub fn hyperparam(&self, name: &str) -> Option<&HyperparamDescriptor> {
        self.hyperparams.iter().find(|h| h.name == name)
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        let malformed = |m: String| Err(RegistryError::MalformedSpec { id: self.id.clone(), reason: m });
        if self.id.is_empty() || self.version.is_empty() {
            return malformed("id and version must be non-empty".into());
        }
        let should_fit = self.role == PrimitiveRole::Estimator;
        if self.requires_fit != should_fit {
            return malformed(format!(
                "{:?} primitives must have requires_fit = {should_fit}",
                self.role
            ));
        }
        for (i, hp) in self.hyperparams.iter().enumerate() {
            if self.hyperparams[..i].iter().any(|h| h.name == hp.name) {
                return malformed(format!("duplicate hyperparameter `{}`", hp.name));
            }
            if let Err(e) = hp.domain.validate() {
                return malformed(format!("hyperparameter `{}`: {e}", hp.name));
            }
            if !hp.domain.contains(&hp.default) {
                return malformed(format!(
                    "default {} of `{}` is outside {}",
                    hp.default, hp.name, hp.domain
                ));
            }
        }
        Ok(())
    }
}

/// Resolved hyperparameters of one step: defaults overlaid with bindings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hyperparams(BTreeMap<String, Value>);

impl Hyperparams {
    pub fn resolve(spec: &PrimitiveSpec, bindings: &BTreeMap<String, Value>) -> Self {
        let mut values: BTreeMap<String, Value> =
            spec.hyperparams.iter().map(|h| (h.name.clone(), h.default.clone())).collect();
        for (k, v) in bindings {
            values.insert(k.clone(), v.clone());
        }
        Hyperparams(values)
    }

    pub fn from_map(values: BTreeMap<String, Value>) -> Self {
        Hyperparams(values)
    }

    pub fn get(&self, name: &str) -> Result<&Value, PrimitiveError> {
        self.0
            .get(name)
            .ok_or_else(|| PrimitiveError::Hyperparam(format!("missing `{name}`")))
    }

    pub fn f64(&self, name: &str) -> Result<f64, PrimitiveError> {
        self.get(name)?
            .as_f64()
            .ok_or_else(|| PrimitiveError::Hyperparam(format!("`{name}` is not a number")))
    }

    pub fn usize(&self, name: &str) -> Result<usize, PrimitiveError> {
        self.get(name)?
            .as_i64()
            .and_then(|v| usize::try_from(v).ok())
            .ok_or_else(|| PrimitiveError::Hyperparam(format!("`{name}` is not a non-negative integer")))
    }

    pub fn str(&self, name: &str) -> Result<&str, PrimitiveError> {
        self.get(name)?
            .as_str()
            .ok_or_else(|| PrimitiveError::Hyperparam(format!("`{name}` is not a string")))
    }

    pub fn usize_list(&self, name: &str) -> Result<Vec<usize>, PrimitiveError> {
        match self.get(name)? {
            Value::List(items) => items
                .iter()
                .map(|v| v.as_i64().and_then(|i| usize::try_from(i).ok()))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| PrimitiveError::Hyperparam(format!("`{name}` must list integers"))),
            _ => Err(PrimitiveError::Hyperparam(format!("`{name}` is not a list"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Running on training data inside `fit_pipeline`.
    Fit,
    /// Running on new data inside `produce_pipeline`.
    Produce,
}

/// Per-step execution context. The RNG stream is derived from the pipeline
/// seed and the step index.
pub struct StepContext {
    pub phase: Phase,
    pub step_index: usize,
    pub rng: ChaCha8Rng,
}

#[derive(Debug, Error)]
pub enum PrimitiveError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("bad hyperparameter: {0}")]
    Hyperparam(String),
    #[error("bad learned state: {0}")]
    State(String),
    #[error("primitive does not support fitting")]
    NotTrainable,
    #[error(transparent)]
    Other(Box<dyn StdError + Send + Sync>),
}

impl PrimitiveError {
    pub fn other(e: impl StdError + Send + Sync + 'static) -> Self {
        PrimitiveError::Other(Box::new(e))
    }
}

/// Executable side of a primitive.
///
/// `fit` is only called for primitives whose spec has `requires_fit`; the
/// returned bytes are the step's learned state and are handed back to
/// `produce`.
pub trait Primitive: Send + Sync {
    fn fit(
        &self,
        _hyperparams: &Hyperparams,
        _inputs: &[&ValueEnvelope],
        _ctx: &mut StepContext,
    ) -> Result<Vec<u8>, PrimitiveError> {
        Err(PrimitiveError::NotTrainable)
    }

    fn produce(
        &self,
        hyperparams: &Hyperparams,
        state: Option<&[u8]>,
        inputs: &[&ValueEnvelope],
        ctx: &mut StepContext,
    ) -> Result<ValueEnvelope, PrimitiveError>;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("primitive {0} is already registered")]
    DuplicatePrimitive(PrimitiveRef),
    #[error("malformed spec for `{id}`: {reason}")]
    MalformedSpec { id: String, reason: String },
    #[error("algorithm `{0}` is already registered")]
    DuplicateAlgorithm(String),
    #[error("algorithm `{name}` must map to a registered estimator, got {target}")]
    NotAnEstimator { name: String, target: PrimitiveRef },
}

#[derive(Clone)]
struct Entry {
    spec: PrimitiveSpec,
    imp: Arc<dyn Primitive>,
}

/// Primitives keyed by `(id, version)`, plus the estimator families that
/// pipeline builders may select by algorithm name.
#[derive(Clone, Default)]
pub struct Registry {
    entries: BTreeMap<PrimitiveRef, Entry>,
    algorithms: BTreeMap<String, PrimitiveRef>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("primitives", &self.entries.keys().collect::<Vec<_>>())
            .field("algorithms", &self.algorithms)
            .finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, spec: PrimitiveSpec, imp: Arc<dyn Primitive>) -> Result<(), RegistryError> {
        spec.validate()?;
        let key = spec.key();
        if self.entries.contains_key(&key) {
            return Err(RegistryError::DuplicatePrimitive(key));
        }
        self.entries.insert(key, Entry { spec, imp });
        Ok(())
    }

    pub fn spec(&self, key: &PrimitiveRef) -> Option<&PrimitiveSpec> {
        self.entries.get(key).map(|e| &e.spec)
    }

    pub fn implementation(&self, key: &PrimitiveRef) -> Option<Arc<dyn Primitive>> {
        self.entries.get(key).map(|e| Arc::clone(&e.imp))
    }

    pub fn primitives(&self) -> impl Iterator<Item = &PrimitiveSpec> {
        self.entries.values().map(|e| &e.spec)
    }

    /// Makes an estimator selectable by algorithm name.
    pub fn register_algorithm(&mut self, name: impl Into<String>, target: PrimitiveRef) -> Result<(), RegistryError> {
        let name = name.into();
        if self.algorithms.contains_key(&name) {
            return Err(RegistryError::DuplicateAlgorithm(name));
        }
        match self.spec(&target) {
            Some(spec) if spec.role == PrimitiveRole::Estimator => {}
            _ => return Err(RegistryError::NotAnEstimator { name, target }),
        }
        self.algorithms.insert(name, target);
        Ok(())
    }

    pub fn algorithm(&self, name: &str) -> Option<&PrimitiveRef> {
        self.algorithms.get(name)
    }

    pub fn algorithms(&self) -> impl Iterator<Item = &str> {
        self.algorithms.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl Primitive for Echo {
        fn produce(
            &self,
            _: &Hyperparams,
            _: Option<&[u8]>,
            inputs: &[&ValueEnvelope],
            _: &mut StepContext,
        ) -> Result<ValueEnvelope, PrimitiveError> {
            Ok(inputs[0].clone())
        }
    }

    fn spec(default: i64) -> PrimitiveSpec {
        PrimitiveSpec {
            id: "zoo.segment_sample".into(),
            version: "0.1.0".into(),
            role: PrimitiveRole::Transformer,
            input_kinds: vec![ValueKind::RawFrames],
            output_kind: ValueKind::RawFrames,
            hyperparams: vec![HyperparamDescriptor::new(
                "num_segments",
                ParamDomain::choice([8i64, 16, 32]).unwrap(),
                default,
            )],
            requires_fit: false,
        }
    }

    #[test]
    fn register_and_lookup() {
        let mut r = Registry::new();
        r.register(spec(16), Arc::new(Echo)).unwrap();
        let key = PrimitiveRef::new("zoo.segment_sample", "0.1.0");
        assert_eq!(r.spec(&key), Some(&spec(16)));
        assert_eq!(
            r.register(spec(16), Arc::new(Echo)),
            Err(RegistryError::DuplicatePrimitive(key))
        );
    }

    #[test]
    fn default_outside_domain_is_malformed() {
        let mut r = Registry::new();
        assert!(matches!(
            r.register(spec(64), Arc::new(Echo)),
            Err(RegistryError::MalformedSpec { .. })
        ));
    }

    #[test]
    fn duplicate_hyperparams_and_role_mismatch_are_malformed() {
        let mut s = spec(16);
        s.hyperparams.push(s.hyperparams[0].clone());
        assert!(matches!(s.validate(), Err(RegistryError::MalformedSpec { .. })));
        let mut s = spec(16);
        s.requires_fit = true;
        assert!(matches!(s.validate(), Err(RegistryError::MalformedSpec { .. })));
    }

    #[test]
    fn algorithms_must_point_at_estimators() {
        let mut r = Registry::new();
        r.register(spec(16), Arc::new(Echo)).unwrap();
        assert!(matches!(
            r.register_algorithm("x", PrimitiveRef::new("zoo.segment_sample", "0.1.0")),
            Err(RegistryError::NotAnEstimator { .. })
        ));
    }
}
