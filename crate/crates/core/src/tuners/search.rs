use std::time::Instant;

use super::{SearchStrategy, Trial, TrialSink, TunerError};
use crate::hyperspace::{ConfigSample, SearchSpace};
use crate::seed::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best_config: ConfigSample,
    pub best_value: f64,
    pub trials: Vec<Trial>,
}

/// Earliest trial with the minimum objective among complete trials.
pub fn best_trial(trials: &[Trial]) -> Result<&Trial, TunerError> {
    let mut best: Option<&Trial> = None;
    for t in trials.iter().filter(|t| t.is_complete()) {
        if best.is_none_or(|b| t.loss() < b.loss() || (t.loss() == b.loss() && t.id < b.id)) {
            best = Some(t);
        }
    }
    best.ok_or(TunerError::NoCompleteTrials)
}

/// Runs exactly `budget.max_trials` trials, one at a time. Trial `i` draws
/// its suggestion from rng stream `i` of the budget seed. An objective that
/// errors or returns a non-finite value marks the trial failed.
pub fn run_search<E>(
    objective: &mut dyn FnMut(&ConfigSample) -> Result<f64, E>,
    space: &SearchSpace,
    strategy: &dyn SearchStrategy,
    budget: SearchBudget,
    sink: &mut dyn TrialSink,
) -> Result<SearchResult, TunerError> {
    if budget.max_trials == 0 {
        return Err(TunerError::ZeroBudget);
    }
    let mut trials: Vec<Trial> = Vec::with_capacity(budget.max_trials);
    for id in 0..budget.max_trials {
        let mut rng = stream_rng(budget.seed, id as u64);
        let config = strategy.suggest(space, &trials, &mut rng)?;
        let started = Instant::now();
        let outcome = objective(&config);
        let wall_ms = started.elapsed().as_millis() as u64;
        let trial = match outcome {
            Ok(v) if v.is_finite() => Trial::complete(id, config, v, wall_ms),
            _ => Trial::failed(id, config, wall_ms),
        };
        sink.record(&trial)?;
        trials.push(trial);
    }
    let best = best_trial(&trials).map_err(|_| TunerError::AllTrialsFailed { trials: trials.len() })?;
    Ok(SearchResult { best_config: best.config.clone(), best_value: best.loss(), trials })
}
