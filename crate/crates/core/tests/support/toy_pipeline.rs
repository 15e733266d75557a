//! Matrix-valued toy primitives and random valid pipelines over them.
#![allow(dead_code)]

use std::sync::Arc;

use autovid::hyperspace::{ConfigSample, ParamDomain};
use autovid::pipeline::*;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

struct Scale;
struct Sum;
struct Center;
struct Labels;

fn matrix<'a>(v: &'a ValueEnvelope) -> Result<&'a FeatureMatrix, PrimitiveError> {
    match v {
        ValueEnvelope::FeatureMatrix(m) => Ok(m),
        other => Err(PrimitiveError::BadInput(format!("{:?}", other.kind()))),
    }
}

fn map(m: &FeatureMatrix, f: impl Fn(usize, f64) -> f64) -> ValueEnvelope {
    let data = m.data().iter().enumerate().map(|(i, x)| f(i % m.cols(), *x)).collect();
    ValueEnvelope::FeatureMatrix(FeatureMatrix::new(m.rows(), m.cols(), data).unwrap())
}

impl Primitive for Scale {
    fn produce(&self, hp: &Hyperparams, _: Option<&[u8]>, inputs: &[&ValueEnvelope], _: &mut StepContext) -> Result<ValueEnvelope, PrimitiveError> {
        let k = hp.f64("factor")?;
        let sign = if hp.str("mode")? == "neg" { -1.0 } else { 1.0 };
        Ok(map(matrix(inputs[0])?, |_, x| sign * k * x))
    }
}

impl Primitive for Sum {
    fn produce(&self, _: &Hyperparams, _: Option<&[u8]>, inputs: &[&ValueEnvelope], _: &mut StepContext) -> Result<ValueEnvelope, PrimitiveError> {
        let (a, b) = (matrix(inputs[0])?, matrix(inputs[1])?);
        let data = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
        Ok(ValueEnvelope::FeatureMatrix(FeatureMatrix::new(a.rows(), a.cols(), data).unwrap()))
    }
}

impl Primitive for Center {
    fn fit(&self, hp: &Hyperparams, inputs: &[&ValueEnvelope], ctx: &mut StepContext) -> Result<Vec<u8>, PrimitiveError> {
        let m = matrix(inputs[0])?;
        let jitter = hp.f64("jitter")?;
        let mut state = Vec::new();
        for c in 0..m.cols() {
            let mean = (0..m.rows()).map(|r| m.row(r)[c]).sum::<f64>() / m.rows() as f64;
            let shift = mean + jitter * ctx.rng.random::<f64>();
            state.extend_from_slice(&shift.to_le_bytes());
        }
        Ok(state)
    }

    fn produce(&self, _: &Hyperparams, state: Option<&[u8]>, inputs: &[&ValueEnvelope], _: &mut StepContext) -> Result<ValueEnvelope, PrimitiveError> {
        let state = state.ok_or_else(|| PrimitiveError::State("missing".into()))?;
        let shifts: Vec<f64> = state.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(map(matrix(inputs[0])?, |c, x| x - shifts[c]))
    }
}

impl Primitive for Labels {
    fn produce(&self, _: &Hyperparams, _: Option<&[u8]>, inputs: &[&ValueEnvelope], _: &mut StepContext) -> Result<ValueEnvelope, PrimitiveError> {
        let m = matrix(inputs[0])?;
        Ok(ValueEnvelope::LabelVector((0..m.rows()).map(|r| format!("{}", m.row(r)[0] > 0.0)).collect()))
    }
}

pub const FM: ValueKind = ValueKind::FeatureMatrix;

fn spec(id: &str, role: PrimitiveRole, inputs: Vec<ValueKind>, output: ValueKind, hyperparams: Vec<HyperparamDescriptor>) -> PrimitiveSpec {
    PrimitiveSpec {
        id: id.into(),
        version: "1".into(),
        role,
        input_kinds: inputs,
        output_kind: output,
        hyperparams,
        requires_fit: role == PrimitiveRole::Estimator,
    }
}

pub fn registry() -> Registry {
    let mut r = Registry::new();
    let t = PrimitiveRole::Transformer;
    r.register(
        spec("toy.scale", t, vec![FM], FM, vec![
            HyperparamDescriptor::new("factor", ParamDomain::uniform(0.1, 10.0).unwrap(), 1.0).tunable(),
            HyperparamDescriptor::new("mode", ParamDomain::choice(["pos", "neg"]).unwrap(), "pos"),
        ]),
        Arc::new(Scale),
    )
    .unwrap();
    r.register(spec("toy.sum", t, vec![FM, FM], FM, vec![]), Arc::new(Sum)).unwrap();
    r.register(
        spec("toy.center", PrimitiveRole::Estimator, vec![FM], FM, vec![
            HyperparamDescriptor::new("jitter", ParamDomain::log_uniform(1e-6, 1.0).unwrap(), 1e-3),
        ]),
        Arc::new(Center),
    )
    .unwrap();
    r.register(spec("toy.labels", t, vec![FM], ValueKind::LabelVector, vec![]), Arc::new(Labels)).unwrap();
    r
}

pub fn prim(id: &str) -> PrimitiveRef {
    PrimitiveRef::new(id, "1")
}

#[derive(Debug, Clone)]
pub struct StepPlan {
    kind: u8,
    picks: [usize; 2],
    factor: Option<f64>,
    neg: Option<bool>,
    jitter: Option<f64>,
}

pub fn step_plan() -> impl Strategy<Value = StepPlan> {
    (
        0u8..4,
        any::<[usize; 2]>(),
        prop::option::of(0.1f64..10.0),
        prop::option::of(any::<bool>()),
        prop::option::of(1e-6f64..1.0),
    )
        .prop_map(|(kind, picks, factor, neg, jitter)| StepPlan { kind, picks, factor, neg, jitter })
}

/// Builds a valid pipeline: every step reads matrix-valued inputs or earlier
/// matrix-valued steps.
pub fn build(num_inputs: usize, plans: &[StepPlan], out_pick: usize) -> PipelineDescription {
    let mut sources: Vec<DataRef> = (0..num_inputs).map(DataRef::Input).collect();
    let mut steps = Vec::new();
    for (index, p) in plans.iter().enumerate() {
        let pick = |n: usize| sources[p.picks[n] % sources.len()];
        let step = match p.kind {
            0 => {
                let mut s = StepDescription::new(prim("toy.scale"), vec![pick(0)]);
                if let Some(f) = p.factor {
                    s = s.bind("factor", f);
                }
                if let Some(n) = p.neg {
                    s = s.bind("mode", if n { "neg" } else { "pos" });
                }
                s
            }
            1 => StepDescription::new(prim("toy.sum"), vec![pick(0), pick(1)]),
            2 => {
                let s = StepDescription::new(prim("toy.center"), vec![pick(0)]);
                match p.jitter {
                    Some(j) => s.bind("jitter", j),
                    None => s,
                }
            }
            _ => StepDescription::new(prim("toy.labels"), vec![pick(0)]),
        };
        if p.kind != 3 {
            sources.push(DataRef::Step(index));
        }
        steps.push(step);
    }
    PipelineDescription::new(num_inputs, steps, DataRef::Step(out_pick % plans.len()))
}

pub fn pipelines() -> impl Strategy<Value = PipelineDescription> {
    (1usize..3, prop::collection::vec(step_plan(), 1..9), any::<usize>()).prop_map(|(n, plans, out)| build(n, &plans, out))
}

pub fn inputs(n: usize, seed: u64) -> Vec<ValueEnvelope> {
    let mut rng = autovid::seed::stream_rng(seed, 99);
    (0..n)
        .map(|_| {
            let data = (0..12).map(|_| rng.random_range(-5.0..5.0)).collect();
            ValueEnvelope::FeatureMatrix(FeatureMatrix::new(4, 3, data).unwrap())
        })
        .collect()
}

pub fn desc_with_scale(desc: &PipelineDescription) -> PipelineDescription {
    let mut steps = desc.steps.clone();
    steps.push(StepDescription::new(prim("toy.scale"), vec![DataRef::Input(0)]));
    PipelineDescription::new(desc.num_inputs, steps, desc.output)
}

pub fn check_round_trip(desc: &PipelineDescription) -> Result<(), TestCaseError> {
    let reg = registry();
    prop_assert!(validate_pipeline(desc, &reg).ok(), "{}", validate_pipeline(desc, &reg));
    let text = serialize_pipeline(desc);
    let back = deserialize_pipeline(&text).unwrap();
    prop_assert_eq!(serialize_pipeline(&back), text);
    prop_assert_eq!(&back, desc);
    prop_assert_eq!(back.content_id(), desc.pipeline_id.clone());
    Ok(())
}

pub fn check_forward_reference(desc: &PipelineDescription, at: usize, ahead: usize) -> Result<(), TestCaseError> {
    let mut bad = desc.clone();
    let index = at % bad.steps.len();
    bad.steps[index].inputs[0] = DataRef::Step(index + ahead);
    prop_assert!(validate_pipeline(&bad, &registry()).has(IssueCode::ForwardReference));
    Ok(())
}

pub fn check_kind_mismatch(desc: &PipelineDescription, from: usize) -> Result<(), TestCaseError> {
    let mut bad = desc.clone();
    let source = from % bad.num_inputs;
    bad.steps.push(StepDescription::new(prim("toy.labels"), vec![DataRef::Input(source)]));
    let label_step = bad.steps.len() - 1;
    bad.steps.push(StepDescription::new(prim("toy.scale"), vec![DataRef::Step(label_step)]));
    let report = validate_pipeline(&bad, &registry());
    prop_assert!(report.has(IssueCode::KindMismatch));
    prop_assert_eq!(report.issues.len(), 1);
    Ok(())
}

/// `factor` must lie outside [0.1, 10).
pub fn check_out_of_domain(desc: &PipelineDescription, factor: f64) -> Result<(), TestCaseError> {
    let mut bad = desc.clone();
    bad.steps.push(StepDescription::new(prim("toy.scale"), vec![DataRef::Input(0)]).bind("factor", factor));
    prop_assert!(validate_pipeline(&bad, &registry()).has(IssueCode::OutOfDomainBinding));
    let with_scale = desc_with_scale(desc);
    let config = ConfigSample::new().with(format!("{}.factor", with_scale.steps.len() - 1), factor);
    prop_assert!(bind_config(&with_scale, &config, &registry()).is_err());
    Ok(())
}

pub fn check_determinism(desc: &PipelineDescription, seed: u64) -> Result<(), TestCaseError> {
    let reg = registry();
    let xs = inputs(desc.num_inputs, seed);
    let (a, trace) = fit_pipeline_traced(desc, &xs, &reg, seed).unwrap();
    let b = fit_pipeline(desc, &xs, &reg, seed).unwrap();
    prop_assert_eq!(a.fingerprint(), b.fingerprint());
    prop_assert_eq!(encode_fitted(&a), encode_fitted(&b));
    let (pa, pb) = (produce_pipeline(&a, &xs, &reg).unwrap(), produce_pipeline(&b, &xs, &reg).unwrap());
    prop_assert_eq!(pa, pb);
    for (pos, &step) in trace.order.iter().enumerate() {
        for r in &desc.steps[step].inputs {
            if let DataRef::Step(i) = r {
                prop_assert!(trace.order[..pos].contains(i));
            }
        }
    }
    prop_assert_eq!(trace.order.len(), desc.steps.len());
    Ok(())
}
