use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::primitive::PrimitiveRef;
use crate::hyperspace::Value;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DescriptionError {
    #[error("parse error at {line}:{column}: {message}")]
    ParseError { line: usize, column: usize, message: String },
    #[error("unsupported schema version {0:?}")]
    SchemaVersionUnsupported(String),
}

impl DescriptionError {
    fn semantic(message: impl Into<String>) -> Self {
        DescriptionError::ParseError { line: 0, column: 0, message: message.into() }
    }
}

/// Where a step reads one of its inputs from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DataRef {
    /// `inputs.k`: the k-th pipeline input.
    Input(usize),
    /// `steps.i`: the output of step i.
    Step(usize),
}

impl fmt::Display for DataRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataRef::Input(k) => write!(f, "inputs.{k}"),
            DataRef::Step(i) => write!(f, "steps.{i}"),
        }
    }
}

impl FromStr for DataRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_index = |digits: &str| {
            // canonical decimal only: no sign, no leading zeros
            if digits.is_empty() || (digits.len() > 1 && digits.starts_with('0')) || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(format!("bad reference {s:?}"));
            }
            digits.parse::<usize>().map_err(|_| format!("bad reference {s:?}"))
        };
        if let Some(rest) = s.strip_prefix("inputs.") {
            Ok(DataRef::Input(parse_index(rest)?))
        } else if let Some(rest) = s.strip_prefix("steps.") {
            Ok(DataRef::Step(parse_index(rest)?))
        } else {
            Err(format!("bad reference {s:?}, expected inputs.<k> or steps.<i>"))
        }
    }
}

impl Serialize for DataRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DataRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDescription {
    pub primitive: PrimitiveRef,
    pub bindings: BTreeMap<String, Value>,
    pub inputs: Vec<DataRef>,
}

impl StepDescription {
    pub fn new(primitive: PrimitiveRef, inputs: Vec<DataRef>) -> Self {
        Self { primitive, bindings: BTreeMap::new(), inputs }
    }

    pub fn bind(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.bindings.insert(name.into(), value.into());
        self
    }
}

/// A DAG of primitive steps. Steps may only reference pipeline inputs or
/// earlier steps, so the graph is acyclic by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineDescription {
    pub pipeline_id: String,
    pub num_inputs: usize,
    pub steps: Vec<StepDescription>,
    pub output: DataRef,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    schema_version: String,
    pipeline_id: String,
    num_inputs: usize,
    steps: Vec<StepDescription>,
    output: DataRef,
}

#[derive(Serialize)]
struct WireRef<'a> {
    schema_version: &'a str,
    pipeline_id: &'a str,
    num_inputs: usize,
    steps: &'a [StepDescription],
    output: DataRef,
}

fn is_pipeline_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

impl PipelineDescription {
    /// Builds a description whose id is derived from its content.
    pub fn new(num_inputs: usize, steps: Vec<StepDescription>, output: DataRef) -> Self {
        let mut desc = Self { pipeline_id: String::new(), num_inputs, steps, output };
        desc.pipeline_id = desc.content_id();
        desc
    }

    /// First 16 bytes (hex) of the SHA-256 of the canonical text with an
    /// empty id.
    pub fn content_id(&self) -> String {
        let text = serde_json::to_string(&WireRef {
            schema_version: SCHEMA_VERSION,
            pipeline_id: "",
            num_inputs: self.num_inputs,
            steps: &self.steps,
            output: self.output,
        })
        .expect("serializable");
        hex::encode(&Sha256::digest(text.as_bytes())[..16])
    }

    /// Canonical JSON: fixed field order, sorted bindings, shortest
    /// round-trip floats, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(&WireRef {
            schema_version: SCHEMA_VERSION,
            pipeline_id: &self.pipeline_id,
            num_inputs: self.num_inputs,
            steps: &self.steps,
            output: self.output,
        })
        .expect("serializable")
    }

    /// Strict parse: unknown fields, malformed ids or references, and an
    /// output that does not name an existing step are all rejected.
    pub fn from_json(text: &str) -> Result<Self, DescriptionError> {
        let wire: Wire = match serde_json::from_str(text) {
            Ok(w) => w,
            Err(e) => {
                if let Ok(serde_json::Value::Object(obj)) = serde_json::from_str::<serde_json::Value>(text) {
                    if let Some(v) = obj.get("schema_version") {
                        if v.as_str() != Some(SCHEMA_VERSION) {
                            return Err(DescriptionError::SchemaVersionUnsupported(v.to_string()));
                        }
                    }
                }
                return Err(DescriptionError::ParseError {
                    line: e.line(),
                    column: e.column(),
                    message: e.to_string(),
                });
            }
        };
        if wire.schema_version != SCHEMA_VERSION {
            return Err(DescriptionError::SchemaVersionUnsupported(wire.schema_version));
        }
        if !is_pipeline_id(&wire.pipeline_id) {
            return Err(DescriptionError::semantic(format!(
                "pipeline_id {:?} is not 32 lowercase hex characters",
                wire.pipeline_id
            )));
        }
        match wire.output {
            DataRef::Step(i) if i < wire.steps.len() => {}
            other => {
                return Err(DescriptionError::semantic(format!(
                    "output {other} does not reference one of the {} steps",
                    wire.steps.len()
                )))
            }
        }
        for (i, step) in wire.steps.iter().enumerate() {
            if let Some((name, _)) = step.bindings.iter().find(|(_, v)| !v.is_finite()) {
                return Err(DescriptionError::semantic(format!("step {i}: binding `{name}` is not finite")));
            }
        }
        Ok(Self {
            pipeline_id: wire.pipeline_id,
            num_inputs: wire.num_inputs,
            steps: wire.steps,
            output: wire.output,
        })
    }
}
