use sha2::{Digest, Sha256};
use thiserror::Error;

use super::description::{DataRef, PipelineDescription};
use super::envelope::ValueEnvelope;
use super::primitive::{Hyperparams, Phase, PrimitiveError, Registry, StepContext};
use super::validate::{validate_pipeline, ValidationReport};
use crate::seed::stream_rng;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("pipeline failed validation: {0}")]
    ValidationFailed(ValidationReport),
    #[error("pipeline takes {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("step {step} failed: {cause}")]
    StepExecutionFailed { step: usize, cause: PrimitiveError },
}

fn step_failed(step: usize, cause: PrimitiveError) -> ExecError {
    ExecError::StepExecutionFailed { step, cause }
}

/// A pipeline description plus the learned state of every step.
///
/// Immutable once built; `produce_pipeline` only reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    description: PipelineDescription,
    step_states: Vec<Vec<u8>>,
    fit_seed: u64,
    fingerprint: [u8; 32],
}

impl FittedPipeline {
    /// Assembles a fitted pipeline and computes its fingerprint.
    pub fn new(description: PipelineDescription, step_states: Vec<Vec<u8>>, fit_seed: u64) -> Self {
        assert_eq!(description.steps.len(), step_states.len(), "one state per step");
        let fingerprint = fingerprint(&description.to_canonical_json(), &step_states, fit_seed);
        Self { description, step_states, fit_seed, fingerprint }
    }

    pub fn description(&self) -> &PipelineDescription {
        &self.description
    }
    pub fn step_states(&self) -> &[Vec<u8>] {
        &self.step_states
    }
    pub fn fit_seed(&self) -> u64 {
        self.fit_seed
    }
    pub fn fingerprint(&self) -> &[u8; 32] {
        &self.fingerprint
    }
    pub fn fingerprint_hex(&self) -> String {
        hex::encode(self.fingerprint)
    }
}

/// SHA-256 over the canonical description, each length-prefixed state blob,
/// and the fit seed.
pub fn fingerprint(description_text: &str, step_states: &[Vec<u8>], fit_seed: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((description_text.len() as u32).to_le_bytes());
    h.update(description_text.as_bytes());
    for state in step_states {
        h.update((state.len() as u32).to_le_bytes());
        h.update(state);
    }
    h.update(fit_seed.to_le_bytes());
    h.finalize().into()
}

/// What happened during one run: the order in which steps executed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub order: Vec<usize>,
}

fn resolve<'a>(
    reference: DataRef,
    inputs: &'a [ValueEnvelope],
    outputs: &'a [ValueEnvelope],
) -> &'a ValueEnvelope {
    match reference {
        DataRef::Input(k) => &inputs[k],
        DataRef::Step(i) => &outputs[i],
    }
}

fn check_input_kinds(
    registry: &Registry,
    desc: &PipelineDescription,
    index: usize,
    args: &[&ValueEnvelope],
) -> Result<(), ExecError> {
    let spec = registry.spec(&desc.steps[index].primitive).expect("validated");
    for (slot, (arg, expected)) in args.iter().zip(&spec.input_kinds).enumerate() {
        if arg.kind() != *expected {
            return Err(step_failed(
                index,
                PrimitiveError::BadInput(format!("input {slot} is {}, expected {expected}", arg.kind())),
            ));
        }
    }
    Ok(())
}

fn check_output(registry: &Registry, desc: &PipelineDescription, index: usize, out: &ValueEnvelope) -> Result<(), ExecError> {
    let spec = registry.spec(&desc.steps[index].primitive).expect("validated");
    if out.kind() != spec.output_kind {
        return Err(step_failed(
            index,
            PrimitiveError::BadInput(format!("produced {}, declared {}", out.kind(), spec.output_kind)),
        ));
    }
    Ok(())
}

/// Fits every step in listed order and returns the fitted pipeline.
pub fn fit_pipeline(
    desc: &PipelineDescription,
    inputs: &[ValueEnvelope],
    registry: &Registry,
    seed: u64,
) -> Result<FittedPipeline, ExecError> {
    fit_pipeline_traced(desc, inputs, registry, seed).map(|(f, _)| f)
}

pub fn fit_pipeline_traced(
    desc: &PipelineDescription,
    inputs: &[ValueEnvelope],
    registry: &Registry,
    seed: u64,
) -> Result<(FittedPipeline, ExecutionTrace), ExecError> {
    let mut report = validate_pipeline(desc, registry);
    if inputs.len() != desc.num_inputs {
        report.issues.push(super::validate::Issue {
            code: super::validate::IssueCode::ArityMismatch,
            step: None,
            message: format!("pipeline takes {} inputs, got {}", desc.num_inputs, inputs.len()),
        });
    }
    if !report.ok() {
        return Err(ExecError::ValidationFailed(report));
    }

    let mut trace = ExecutionTrace::default();
    let mut outputs: Vec<ValueEnvelope> = Vec::with_capacity(desc.steps.len());
    let mut states = Vec::with_capacity(desc.steps.len());
    for (index, step) in desc.steps.iter().enumerate() {
        let spec = registry.spec(&step.primitive).expect("validated");
        let imp = registry.implementation(&step.primitive).expect("validated");
        let args: Vec<&ValueEnvelope> = step.inputs.iter().map(|r| resolve(*r, inputs, &outputs)).collect();
        check_input_kinds(registry, desc, index, &args)?;
        let hp = Hyperparams::resolve(spec, &step.bindings);
        let mut ctx = StepContext { phase: Phase::Fit, step_index: index, rng: stream_rng(seed, index as u64) };

        let state = if spec.requires_fit {
            imp.fit(&hp, &args, &mut ctx).map_err(|e| step_failed(index, e))?
        } else {
            Vec::new()
        };
        let state_arg = spec.requires_fit.then_some(state.as_slice());
        let out = imp.produce(&hp, state_arg, &args, &mut ctx).map_err(|e| step_failed(index, e))?;
        check_output(registry, desc, index, &out)?;
        trace.order.push(index);
        outputs.push(out);
        states.push(state);
    }
    Ok((FittedPipeline::new(desc.clone(), states, seed), trace))
}

/// Runs a fitted pipeline on new inputs and returns the declared output.
pub fn produce_pipeline(
    fitted: &FittedPipeline,
    inputs: &[ValueEnvelope],
    registry: &Registry,
) -> Result<ValueEnvelope, ExecError> {
    let desc = fitted.description();
    if inputs.len() != desc.num_inputs {
        return Err(ExecError::ArityMismatch { expected: desc.num_inputs, got: inputs.len() });
    }
    let report = validate_pipeline(desc, registry);
    if !report.ok() {
        return Err(ExecError::ValidationFailed(report));
    }

    let mut outputs: Vec<ValueEnvelope> = Vec::with_capacity(desc.steps.len());
    for (index, step) in desc.steps.iter().enumerate() {
        let spec = registry.spec(&step.primitive).expect("validated");
        let imp = registry.implementation(&step.primitive).expect("validated");
        let args: Vec<&ValueEnvelope> = step.inputs.iter().map(|r| resolve(*r, inputs, &outputs)).collect();
        check_input_kinds(registry, desc, index, &args)?;
        let hp = Hyperparams::resolve(spec, &step.bindings);
        let mut ctx = StepContext {
            phase: Phase::Produce,
            step_index: index,
            rng: stream_rng(fitted.fit_seed(), index as u64),
        };
        let state = spec.requires_fit.then(|| fitted.step_states()[index].as_slice());
        let out = imp.produce(&hp, state, &args, &mut ctx).map_err(|e| step_failed(index, e))?;
        check_output(registry, desc, index, &out)?;
        outputs.push(out);
    }

    let DataRef::Step(out_index) = desc.output else {
        unreachable!("validated output is a step reference")
    };
    let result = outputs.swap_remove(out_index);
    if let (Some(rows), Some(table_rows)) = (
        result.row_count(),
        inputs.iter().find_map(|v| v.as_table()).map(|t| t.len()),
    ) {
        if rows != table_rows {
            return Err(step_failed(
                out_index,
                PrimitiveError::BadInput(format!("{rows} output rows for {table_rows} input rows")),
            ));
        }
    }
    Ok(result)
}
