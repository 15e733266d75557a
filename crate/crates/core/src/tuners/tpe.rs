use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Trial, TunerError};
use crate::hyperspace::{from_unit, sample_space, to_unit, ConfigSample, ParamDomain, SearchSpace, Value};

/// Tree-structured Parzen estimator settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TpeParams {
    pub gamma: f64,
    pub n_startup: usize,
    pub n_candidates: usize,
    pub prior_weight: f64,
    pub bandwidth_floor: f64,
}

impl Default for TpeParams {
    fn default() -> Self {
        Self { gamma: 0.25, n_startup: 10, n_candidates: 24, prior_weight: 1.0, bandwidth_floor: 1e-3 }
    }
}

impl TpeParams {
    pub fn validate(&self) -> Result<(), TunerError> {
        let ok = self.gamma > 0.0
            && self.gamma < 1.0
            && self.n_candidates >= 1
            && self.prior_weight > 0.0
            && self.prior_weight.is_finite()
            && self.bandwidth_floor > 0.0
            && self.bandwidth_floor.is_finite();
        if ok {
            Ok(())
        } else {
            Err(TunerError::InvalidParams(format!("{self:?}")))
        }
    }
}

/// Same distribution and rng consumption as `sample_space`.
pub fn suggest_random<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Result<ConfigSample, TunerError> {
    if space.is_empty() {
        return Err(TunerError::EmptySpace);
    }
    Ok(sample_space(space, rng)?)
}

/// Sorts by objective (failed trials count as +inf), ties to the lower id,
/// and puts the first `ceil(gamma * n)` in the good set.
pub fn tpe_partition(history: &[Trial], gamma: f64) -> Result<(Vec<Trial>, Vec<Trial>), TunerError> {
    if history.is_empty() {
        return Err(TunerError::EmptyHistory);
    }
    let mut sorted = history.to_vec();
    sorted.sort_by(|a, b| a.loss().total_cmp(&b.loss()).then(a.id.cmp(&b.id)));
    let n_good = ((gamma * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let bad = sorted.split_off(n_good);
    Ok((sorted, bad))
}

/// Per-observation bandwidths: distance to the nearer sorted neighbour, with
/// 0 and 1 acting as neighbours at the ends, floored.
pub fn bandwidths(observations: &[f64], floor: f64) -> Vec<f64> {
    let mut order: Vec<usize> = (0..observations.len()).collect();
    order.sort_by(|&a, &b| observations[a].total_cmp(&observations[b]));
    let mut out = vec![0.0; observations.len()];
    for (rank, &i) in order.iter().enumerate() {
        let x = observations[i];
        let left = if rank == 0 { 0.0 } else { observations[order[rank - 1]] };
        let right = if rank + 1 == order.len() { 1.0 } else { observations[order[rank + 1]] };
        out[i] = (x - left).min(right - x).max(floor);
    }
    out
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / std::f64::consts::SQRT_2))
}

fn truncated_normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    let pdf = (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let mass = normal_cdf((1.0 - mu) / sigma) - normal_cdf(-mu / sigma);
    pdf / mass
}

fn check_unit(x: f64) -> Result<(), TunerError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(TunerError::OutOfUnitCube(x))
    }
}

/// Log-density of the Parzen mixture on [0, 1]: a uniform prior with weight
/// `prior_weight` plus one truncated Gaussian per observation with weight 1.
pub fn kde_log_density(observations: &[f64], prior_weight: f64, bandwidth_floor: f64, x: f64) -> Result<f64, TunerError> {
    check_unit(x)?;
    for &o in observations {
        check_unit(o)?;
    }
    let bw = bandwidths(observations, bandwidth_floor);
    let mixture: f64 = observations.iter().zip(&bw).map(|(&mu, &s)| truncated_normal_pdf(x, mu, s)).sum();
    Ok(((prior_weight + mixture) / (observations.len() as f64 + prior_weight)).ln())
}

/// Smoothed categorical frequencies.
pub fn categorical_weights(counts: &[usize], prior_weight: f64) -> Vec<f64> {
    let k = counts.len() as f64;
    let n: usize = counts.iter().sum();
    let denom = n as f64 + prior_weight;
    counts.iter().map(|&c| (c as f64 + prior_weight / k) / denom).collect()
}

fn sample_kde<R: Rng + ?Sized>(observations: &[f64], bw: &[f64], prior_weight: f64, rng: &mut R) -> f64 {
    let total = observations.len() as f64 + prior_weight;
    let pick = rng.random::<f64>() * total;
    if pick < prior_weight || observations.is_empty() {
        return rng.random::<f64>();
    }
    let i = ((pick - prior_weight) as usize).min(observations.len() - 1);
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let x = observations[i] + bw[i] * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
}

fn sample_categorical<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let mut u = rng.random::<f64>();
    for (j, &w) in weights.iter().enumerate() {
        if u < w {
            return j;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Density model of one dimension.
#[derive(Debug, Clone)]
enum DimModel {
    Continuous { good: Vec<f64>, good_bw: Vec<f64>, bad: Vec<f64> },
    Categorical { good: Vec<f64>, bad: Vec<f64> },
    Fixed,
}

fn observe(domain: &ParamDomain, name: &str, trials: &[Trial]) -> Vec<Value> {
    trials
        .iter()
        .filter_map(|t| t.config.get(name))
        .filter(|v| domain.contains(v))
        .cloned()
        .collect()
}

fn option_counts(options: &[Value], values: &[Value]) -> Vec<usize> {
    let mut counts = vec![0; options.len()];
    for v in values {
        if let Some(j) = options.iter().position(|o| o.same_as(v)) {
            counts[j] += 1;
        }
    }
    counts
}

/// Score of a single candidate: sum over dimensions of log l - log g.
pub fn candidate_score(
    space: &SearchSpace,
    good: &[Trial],
    bad: &[Trial],
    params: &TpeParams,
    candidate: &ConfigSample,
) -> Result<f64, TunerError> {
    let models = build_models(space, good, bad, params)?;
    score(space, &models, params, candidate)
}

fn build_models(space: &SearchSpace, good: &[Trial], bad: &[Trial], params: &TpeParams) -> Result<Vec<DimModel>, TunerError> {
    space
        .iter()
        .map(|(name, domain)| match domain {
            ParamDomain::Uniform { .. } | ParamDomain::LogUniform { .. } => {
                let unit = |ts: &[Trial]| -> Result<Vec<f64>, TunerError> {
                    observe(domain, name, ts).iter().map(|v| Ok(to_unit(domain, v)?)).collect()
                };
                let good = unit(good)?;
                let good_bw = bandwidths(&good, params.bandwidth_floor);
                Ok(DimModel::Continuous { good, good_bw, bad: unit(bad)? })
            }
            ParamDomain::Choice { options } => Ok(DimModel::Categorical {
                good: categorical_weights(&option_counts(options, &observe(domain, name, good)), params.prior_weight),
                bad: categorical_weights(&option_counts(options, &observe(domain, name, bad)), params.prior_weight),
            }),
            ParamDomain::Constant { .. } | ParamDomain::Text => Ok(DimModel::Fixed),
        })
        .collect()
}

fn score(space: &SearchSpace, models: &[DimModel], params: &TpeParams, candidate: &ConfigSample) -> Result<f64, TunerError> {
    let mut total = 0.0;
    for ((name, domain), model) in space.iter().zip(models) {
        let value = candidate.get(name).ok_or_else(|| TunerError::InvalidParams(format!("candidate lacks `{name}`")))?;
        total += match (model, domain) {
            (DimModel::Continuous { good, bad, .. }, _) => {
                let u = to_unit(domain, value)?.clamp(0.0, 1.0);
                kde_log_density(good, params.prior_weight, params.bandwidth_floor, u)?
                    - kde_log_density(bad, params.prior_weight, params.bandwidth_floor, u)?
            }
            (DimModel::Categorical { good, bad }, ParamDomain::Choice { options }) => {
                let j = options.iter().position(|o| o.same_as(value)).ok_or_else(|| {
                    TunerError::InvalidParams(format!("candidate value {value} outside `{name}`"))
                })?;
                good[j].ln() - bad[j].ln()
            }
            _ => 0.0,
        };
    }
    Ok(total)
}

/// Everything one TPE suggestion looked at.
#[derive(Debug, Clone, PartialEq)]
pub struct TpeSuggestion {
    pub config: ConfigSample,
    pub candidates: Vec<ConfigSample>,
    pub scores: Vec<f64>,
    /// Index into `candidates`; `None` when the startup rule applied.
    pub chosen: Option<usize>,
}

pub fn suggest_tpe_detailed<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &[Trial],
    params: &TpeParams,
    rng: &mut R,
) -> Result<TpeSuggestion, TunerError> {
    if space.is_empty() {
        return Err(TunerError::EmptySpace);
    }
    params.validate()?;
    let finished: Vec<Trial> = history.iter().filter(|t| t.is_finished()).cloned().collect();
    let complete = finished.iter().filter(|t| t.is_complete()).count();
    if complete < params.n_startup || finished.is_empty() {
        let config = suggest_random(space, rng)?;
        return Ok(TpeSuggestion { config, candidates: Vec::new(), scores: Vec::new(), chosen: None });
    }

    let (good, bad) = tpe_partition(&finished, params.gamma)?;
    let models = build_models(space, &good, &bad, params)?;
    let mut candidates = Vec::with_capacity(params.n_candidates);
    for _ in 0..params.n_candidates {
        let mut config = ConfigSample::new();
        for ((name, domain), model) in space.iter().zip(&models) {
            let value = match (model, domain) {
                (DimModel::Continuous { good, good_bw, .. }, _) => {
                    from_unit(domain, sample_kde(good, good_bw, params.prior_weight, rng))?
                }
                (DimModel::Categorical { good, .. }, ParamDomain::Choice { options }) => {
                    options[sample_categorical(good, rng)].clone()
                }
                _ => domain.sample(rng),
            };
            config.insert(name, value);
        }
        candidates.push(config);
    }
    let scores = candidates
        .iter()
        .map(|c| score(space, &models, params, c))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok(TpeSuggestion { config: candidates[best].clone(), candidates, scores, chosen: Some(best) })
}

pub fn suggest_tpe<R: Rng + ?Sized>(
    space: &SearchSpace,
    history: &[Trial],
    params: &TpeParams,
    rng: &mut R,
) -> Result<ConfigSample, TunerError> {
    suggest_tpe_detailed(space, history, params, rng).map(|s| s.config)
}
