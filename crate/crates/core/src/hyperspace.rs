//! Parameter domains, search spaces and sampling.
//!
//! The same [`ParamDomain`] type describes what a primitive hyperparameter may
//! take and what a tuner is allowed to propose, so a config drawn from a
//! [`SearchSpace`] can be bound straight onto a pipeline.

use std::fmt;

use indexmap::IndexMap;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperError {
    #[error("search space is empty")]
    EmptySpace,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("value {value} is outside domain {domain}")]
    OutOfDomain { value: String, domain: String },
    #[error("duplicate parameter name `{0}`")]
    DuplicateName(String),
    #[error("malformed search space: {0}")]
    Parse(String),
}

/// A scalar (or small list) hyperparameter value.
///
/// Serialized untagged, so integers and floats stay distinguishable in JSON
/// (`16` vs `16.0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Value>),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Int(i) => Some(i as f64),
            Value::Float(f) => Some(f),
            _ => None,
        }
    }

    /// Integer view; floats are accepted only when they are integral.
    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Value::Int(i) => Some(i),
            Value::Float(f) if f.is_finite() && f.fract() == 0.0 && f.abs() < 9.0e15 => {
                Some(f as i64)
            }
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// Equality that treats `Int(16)` and `Float(16.0)` as the same number.
    pub fn same_as(&self, other: &Value) -> bool {
        match (self.as_f64(), other.as_f64()) {
            (Some(a), Some(b)) => a == b,
            _ => match (self, other) {
                (Value::List(a), Value::List(b)) => {
                    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.same_as(y))
                }
                _ => self == other,
            },
        }
    }

    /// True when every float inside the value is finite.
    pub fn is_finite(&self) -> bool {
        match self {
            Value::Float(f) => f.is_finite(),
            Value::List(items) => items.iter().all(Value::is_finite),
            _ => true,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Float(x) => write!(f, "{x:?}"),
            Value::Str(s) => write!(f, "{s:?}"),
            Value::List(items) => {
                write!(f, "[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Self {
        Value::Int(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Str(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Str(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

/// Domain of a single parameter.
///
/// `Text` accepts any string and exists for primitive settings such as file
/// paths; it can never appear in a [`SearchSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParamDomain {
    Uniform { low: f64, high: f64 },
    LogUniform { low: f64, high: f64 },
    Choice { options: Vec<Value> },
    Constant { value: Value },
    Text,
}

impl ParamDomain {
    pub fn uniform(low: f64, high: f64) -> Result<Self, HyperError> {
        let d = ParamDomain::Uniform { low, high };
        d.validate()?;
        Ok(d)
    }

    pub fn log_uniform(low: f64, high: f64) -> Result<Self, HyperError> {
        let d = ParamDomain::LogUniform { low, high };
        d.validate()?;
        Ok(d)
    }

    pub fn choice<I, V>(options: I) -> Result<Self, HyperError>
    where
        I: IntoIterator<Item = V>,
        V: Into<Value>,
    {
        let d = ParamDomain::Choice {
            options: options.into_iter().map(Into::into).collect(),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn constant(value: impl Into<Value>) -> Self {
        ParamDomain::Constant {
            value: value.into(),
        }
    }

    pub fn validate(&self) -> Result<(), HyperError> {
        match self {
            ParamDomain::Uniform { low, high } => {
                if !low.is_finite() || !high.is_finite() || low >= high {
                    return Err(HyperError::InvalidDomain(format!(
                        "uniform needs finite low < high, got [{low}, {high}]"
                    )));
                }
            }
            ParamDomain::LogUniform { low, high } => {
                if !low.is_finite() || !high.is_finite() || *low <= 0.0 || low >= high {
                    return Err(HyperError::InvalidDomain(format!(
                        "loguniform needs finite 0 < low < high, got [{low}, {high}]"
                    )));
                }
            }
            ParamDomain::Choice { options } => {
                if options.is_empty() {
                    return Err(HyperError::InvalidDomain("choice without options".into()));
                }
                for (i, a) in options.iter().enumerate() {
                    if !a.is_finite() {
                        return Err(HyperError::InvalidDomain(format!(
                            "non-finite choice option {a}"
                        )));
                    }
                    if options[..i].iter().any(|b| a.same_as(b)) {
                        return Err(HyperError::InvalidDomain(format!(
                            "duplicate choice option {a}"
                        )));
                    }
                }
            }
            ParamDomain::Constant { value } => {
                if !value.is_finite() {
                    return Err(HyperError::InvalidDomain(format!(
                        "non-finite constant {value}"
                    )));
                }
            }
            ParamDomain::Text => {}
        }
        Ok(())
    }

    /// Closed containment. Choice and Constant compare by value.
    pub fn contains(&self, value: &Value) -> bool {
        match self {
            ParamDomain::Uniform { low, high } | ParamDomain::LogUniform { low, high } => value
                .as_f64()
                .is_some_and(|v| v.is_finite() && *low <= v && v <= *high),
            ParamDomain::Choice { options } => options.iter().any(|o| o.same_as(value)),
            ParamDomain::Constant { value: c } => c.same_as(value),
            ParamDomain::Text => matches!(value, Value::Str(_)),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            ParamDomain::Uniform { .. } | ParamDomain::LogUniform { .. }
        )
    }

    /// Draws one value. Continuous draws are half-open at the top.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Value {
        match self {
            ParamDomain::Uniform { low, high } => {
                let u: f64 = rng.random();
                Value::Float(clamp_half_open(low + u * (high - low), *low, *high))
            }
            ParamDomain::LogUniform { low, high } => {
                let u: f64 = rng.random();
                let (a, b) = (low.ln(), high.ln());
                Value::Float(clamp_half_open((a + u * (b - a)).exp(), *low, *high))
            }
            ParamDomain::Choice { options } => options[rng.random_range(0..options.len())].clone(),
            ParamDomain::Constant { value } => value.clone(),
            ParamDomain::Text => Value::Str(String::new()),
        }
    }

    fn out_of_domain(&self, value: &Value) -> HyperError {
        HyperError::OutOfDomain {
            value: value.to_string(),
            domain: self.to_string(),
        }
    }
}

impl fmt::Display for ParamDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamDomain::Uniform { low, high } => write!(f, "uniform[{low}, {high}]"),
            ParamDomain::LogUniform { low, high } => write!(f, "loguniform[{low}, {high}]"),
            ParamDomain::Choice { options } => write!(f, "choice{}", Value::List(options.clone())),
            ParamDomain::Constant { value } => write!(f, "constant({value})"),
            ParamDomain::Text => write!(f, "text"),
        }
    }
}

fn clamp_half_open(v: f64, low: f64, high: f64) -> f64 {
    if v >= high {
        high.next_down().max(low)
    } else if v < low {
        low
    } else {
        v
    }
}

/// Maps a value onto the unit interval.
pub fn to_unit(domain: &ParamDomain, value: &Value) -> Result<f64, HyperError> {
    if !domain.contains(value) {
        return Err(domain.out_of_domain(value));
    }
    Ok(match domain {
        ParamDomain::Uniform { low, high } => {
            (value.as_f64().expect("numeric") - low) / (high - low)
        }
        ParamDomain::LogUniform { low, high } => {
            (value.as_f64().expect("numeric").ln() - low.ln()) / (high.ln() - low.ln())
        }
        ParamDomain::Choice { options } => {
            let k = options.len();
            if k == 1 {
                0.0
            } else {
                let idx = options
                    .iter()
                    .position(|o| o.same_as(value))
                    .expect("contained");
                idx as f64 / (k - 1) as f64
            }
        }
        ParamDomain::Constant { .. } => 0.0,
        ParamDomain::Text => return Err(domain.out_of_domain(value)),
    })
}

/// Inverse of [`to_unit`]; Choice snaps to the nearest index.
pub fn from_unit(domain: &ParamDomain, u: f64) -> Result<Value, HyperError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(HyperError::OutOfDomain {
            value: u.to_string(),
            domain: "unit interval [0, 1]".into(),
        });
    }
    Ok(match domain {
        ParamDomain::Uniform { low, high } => Value::Float((low + u * (high - low)).clamp(*low, *high)),
        ParamDomain::LogUniform { low, high } => {
            let (a, b) = (low.ln(), high.ln());
            Value::Float((a + u * (b - a)).exp().clamp(*low, *high))
        }
        ParamDomain::Choice { options } => {
            let idx = (u * (options.len() - 1) as f64).round() as usize;
            options[idx.min(options.len() - 1)].clone()
        }
        ParamDomain::Constant { value } => value.clone(),
        ParamDomain::Text => {
            return Err(HyperError::InvalidDomain(
                "text domains have no unit coordinate".into(),
            ))
        }
    })
}

/// Ordered map of parameter name to domain; order drives sampling order.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SearchSpace {
    params: IndexMap<String, ParamDomain>,
}

impl SearchSpace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, domain: ParamDomain) -> Result<(), HyperError> {
        let name = name.into();
        domain.validate()?;
        if matches!(domain, ParamDomain::Text) {
            return Err(HyperError::InvalidDomain(format!(
                "`{name}`: text domains cannot be searched"
            )));
        }
        if self.params.contains_key(&name) {
            return Err(HyperError::DuplicateName(name));
        }
        self.params.insert(name, domain);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, domain: ParamDomain) -> Result<Self, HyperError> {
        self.insert(name, domain)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ParamDomain> {
        self.params.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ParamDomain)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    /// Parses the JSON search-space file format.
    pub fn from_json(text: &str) -> Result<Self, HyperError> {
        let raw: IndexMap<String, ParamDomain> =
            serde_json::from_str(text).map_err(|e| HyperError::Parse(e.to_string()))?;
        let mut space = SearchSpace::new();
        for (name, domain) in raw {
            space.insert(name, domain)?;
        }
        Ok(space)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.params).expect("domains serialize")
    }
}

impl<'de> Deserialize<'de> for SearchSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = IndexMap::<String, ParamDomain>::deserialize(d)?;
        let mut space = SearchSpace::new();
        for (name, domain) in raw {
            space.insert(name, domain).map_err(serde::de::Error::custom)?;
        }
        Ok(space)
    }
}

/// One concrete assignment of values to parameter names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfigSample(pub IndexMap<String, Value>);

impl ConfigSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: impl Into<Value>) {
        self.0.insert(name.into(), value.into());
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.0).expect("values serialize")
    }
}

/// Draws one value per dimension, in the space's insertion order.
pub fn sample_space<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Result<ConfigSample, HyperError> {
    if space.is_empty() {
        return Err(HyperError::EmptySpace);
    }
    let mut config = ConfigSample::new();
    for (name, domain) in space.iter() {
        config.insert(name, domain.sample(rng));
    }
    Ok(config)
}

/// Keys match exactly and every value lies in its domain.
pub fn contains(space: &SearchSpace, config: &ConfigSample) -> bool {
    config.len() == space.len()
        && space
            .iter()
            .all(|(name, domain)| config.get(name).is_some_and(|v| domain.contains(v)))
}

/// Learning rate, momentum, weight decay and segment count, as tuned for the
/// action-recognition classifier.
pub fn default_autovideo_space() -> SearchSpace {
    SearchSpace::new()
        .with("learning_rate", ParamDomain::LogUniform { low: 1e-4, high: 1e-3 })
        .and_then(|s| s.with("momentum", ParamDomain::Uniform { low: 0.9, high: 0.99 }))
        .and_then(|s| s.with("weight_decay", ParamDomain::LogUniform { low: 5e-4, high: 1e-3 }))
        .and_then(|s| s.with("num_segments", ParamDomain::choice([8i64, 16, 32])?))
        .expect("default space is well formed")
}
