use std::fmt;

use thiserror::Error;

use super::description::{DataRef, PipelineDescription};
use super::envelope::ValueKind;
use super::primitive::Registry;
use crate::hyperspace::ConfigSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IssueCode {
    UnknownPrimitive,
    ForwardReference,
    InputOutOfRange,
    ArityMismatch,
    KindMismatch,
    UnknownHyperparam,
    OutOfDomainBinding,
    BadOutput,
    NoSteps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Issue {
    pub code: IssueCode,
    pub step: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has(&self, code: IssueCode) -> bool {
        self.issues.iter().any(|i| i.code == code)
    }

    fn push(&mut self, code: IssueCode, step: Option<usize>, message: String) {
        self.issues.push(Issue { code, step, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for (n, issue) in self.issues.iter().enumerate() {
            if n > 0 {
                write!(f, "; ")?;
            }
            match issue.step {
                Some(s) => write!(f, "step {s}: {:?}: {}", issue.code, issue.message)?,
                None => write!(f, "{:?}: {}", issue.code, issue.message)?,
            }
        }
        Ok(())
    }
}

/// Checks references, kinds, bindings and the output. Issues are returned as
/// data; this never fails.
pub fn validate_pipeline(desc: &PipelineDescription, registry: &Registry) -> ValidationReport {
    let mut report = ValidationReport::default();
    if desc.steps.is_empty() {
        report.push(IssueCode::NoSteps, None, "pipeline has no steps".into());
    }
    // output kind per step, None when the primitive is unknown
    let mut produced: Vec<Option<ValueKind>> = Vec::with_capacity(desc.steps.len());

    for (index, step) in desc.steps.iter().enumerate() {
        let spec = registry.spec(&step.primitive);
        if spec.is_none() {
            report.push(
                IssueCode::UnknownPrimitive,
                Some(index),
                format!("{} is not registered", step.primitive),
            );
        }

        for (slot, reference) in step.inputs.iter().enumerate() {
            let source_kind = match *reference {
                DataRef::Input(k) => {
                    if k >= desc.num_inputs {
                        report.push(
                            IssueCode::InputOutOfRange,
                            Some(index),
                            format!("{reference} but the pipeline has {} inputs", desc.num_inputs),
                        );
                    }
                    None
                }
                DataRef::Step(i) => {
                    if i >= index {
                        report.push(
                            IssueCode::ForwardReference,
                            Some(index),
                            format!("{reference} is not an earlier step"),
                        );
                        None
                    } else {
                        produced[i]
                    }
                }
            };
            if let (Some(spec), Some(actual)) = (spec, source_kind) {
                if let Some(&expected) = spec.input_kinds.get(slot) {
                    if expected != actual {
                        report.push(
                            IssueCode::KindMismatch,
                            Some(index),
                            format!("input {slot} ({reference}) is {actual}, {} expects {expected}", step.primitive),
                        );
                    }
                }
            }
        }

        if let Some(spec) = spec {
            if spec.input_kinds.len() != step.inputs.len() {
                report.push(
                    IssueCode::ArityMismatch,
                    Some(index),
                    format!("{} takes {} inputs, step wires {}", step.primitive, spec.input_kinds.len(), step.inputs.len()),
                );
            }
            for (name, value) in &step.bindings {
                match spec.hyperparam(name) {
                    None => report.push(
                        IssueCode::UnknownHyperparam,
                        Some(index),
                        format!("{} has no hyperparameter `{name}`", step.primitive),
                    ),
                    Some(hp) if !hp.domain.contains(value) => report.push(
                        IssueCode::OutOfDomainBinding,
                        Some(index),
                        format!("`{name}` = {value} is outside {}", hp.domain),
                    ),
                    Some(_) => {}
                }
            }
        }
        produced.push(spec.map(|s| s.output_kind));
    }

    match desc.output {
        DataRef::Step(i) if i < desc.steps.len() => {}
        other => report.push(
            IssueCode::BadOutput,
            None,
            format!("output {other} does not reference an existing step"),
        ),
    }
    report
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BindError {
    #[error("config key `{key}` does not name a hyperparameter: {reason}")]
    UnknownKey { key: String, reason: String },
    #[error("config key `{key}` matches several steps {steps:?}; use <step>.<name>")]
    AmbiguousKey { key: String, steps: Vec<usize> },
    #[error("value {value} for `{key}` is outside {domain}")]
    OutOfDomainValue { key: String, value: String, domain: String },
}

/// Resolves a config key to `(step index, hyperparameter name)`.
///
/// Keys are either `<step>.<name>` or a bare hyperparameter name that exactly
/// one step of the pipeline declares.
pub fn resolve_config_key(
    desc: &PipelineDescription,
    registry: &Registry,
    key: &str,
) -> Result<(usize, String), BindError> {
    let unknown = |reason: String| BindError::UnknownKey { key: key.to_string(), reason };
    if let Some((head, name)) = key.split_once('.') {
        if let Ok(index) = head.parse::<usize>() {
            let step = desc
                .steps
                .get(index)
                .ok_or_else(|| unknown(format!("no step {index}")))?;
            let spec = registry
                .spec(&step.primitive)
                .ok_or_else(|| unknown(format!("{} is not registered", step.primitive)))?;
            if spec.hyperparam(name).is_none() {
                return Err(unknown(format!("{} has no `{name}`", step.primitive)));
            }
            return Ok((index, name.to_string()));
        }
    }
    let matches: Vec<usize> = desc
        .steps
        .iter()
        .enumerate()
        .filter(|(_, s)| registry.spec(&s.primitive).is_some_and(|spec| spec.hyperparam(key).is_some()))
        .map(|(i, _)| i)
        .collect();
    match matches.as_slice() {
        [] => Err(unknown("no step declares it".into())),
        [one] => Ok((*one, key.to_string())),
        _ => Err(BindError::AmbiguousKey { key: key.to_string(), steps: matches }),
    }
}

/// Returns a copy of `desc` with the config's values written into the step
/// bindings. Wiring, step count and primitive ids are untouched.
pub fn bind_config(
    desc: &PipelineDescription,
    config: &ConfigSample,
    registry: &Registry,
) -> Result<PipelineDescription, BindError> {
    let mut out = desc.clone();
    for (key, value) in config.iter() {
        let (index, name) = resolve_config_key(desc, registry, key)?;
        let spec = registry.spec(&desc.steps[index].primitive).expect("resolved above");
        let hp = spec.hyperparam(&name).expect("resolved above");
        if !hp.domain.contains(value) {
            return Err(BindError::OutOfDomainValue {
                key: key.to_string(),
                value: value.to_string(),
                domain: hp.domain.to_string(),
            });
        }
        out.steps[index].bindings.insert(name, value.clone());
    }
    Ok(out)
}
