//! Hyperparameter search: random and TPE strategies behind a common trait,
//! and a sequential ask/tell loop.

mod search;
mod sink;
pub mod tpe;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;
use thiserror::Error;

use crate::hyperspace::{ConfigSample, HyperError, SearchSpace};

pub use search::{best_trial, run_search, SearchBudget, SearchResult};
pub use sink::{trial_log_line, JsonlSink, NullSink, TrialSink};
pub use tpe::{
    bandwidths, candidate_score, categorical_weights, kde_log_density, suggest_random, suggest_tpe,
    suggest_tpe_detailed, tpe_partition, TpeParams, TpeSuggestion,
};

#[derive(Debug, Error)]
pub enum TunerError {
    #[error("search space is empty")]
    EmptySpace,
    #[error("history is empty")]
    EmptyHistory,
    #[error("{0} is outside the unit interval")]
    OutOfUnitCube(f64),
    #[error("invalid tuner parameters: {0}")]
    InvalidParams(String),
    #[error("budget must allow at least one trial")]
    ZeroBudget,
    #[error("all {trials} trials failed")]
    AllTrialsFailed { trials: usize },
    #[error("no complete trials")]
    NoCompleteTrials,
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
    #[error(transparent)]
    Space(#[from] HyperError),
    #[error("trial sink: {0}")]
    Sink(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialStatus {
    Pending,
    Complete,
    Failed,
}

impl TrialStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialStatus::Pending => "pending",
            TrialStatus::Complete => "complete",
            TrialStatus::Failed => "failed",
        }
    }
}

/// One evaluated configuration. Lower objective is better.
#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub id: usize,
    pub config: ConfigSample,
    pub objective: Option<f64>,
    pub status: TrialStatus,
    pub wall_ms: u64,
}

impl Trial {
    pub fn pending(id: usize, config: ConfigSample) -> Self {
        Self { id, config, objective: None, status: TrialStatus::Pending, wall_ms: 0 }
    }

    pub fn complete(id: usize, config: ConfigSample, objective: f64, wall_ms: u64) -> Self {
        assert!(objective.is_finite(), "complete trials carry a finite objective");
        Self { id, config, objective: Some(objective), status: TrialStatus::Complete, wall_ms }
    }

    /// Failed trials carry +inf so they sort into the bad set.
    pub fn failed(id: usize, config: ConfigSample, wall_ms: u64) -> Self {
        Self { id, config, objective: Some(f64::INFINITY), status: TrialStatus::Failed, wall_ms }
    }

    pub fn is_complete(&self) -> bool {
        self.status == TrialStatus::Complete
    }

    pub fn is_finished(&self) -> bool {
        self.status != TrialStatus::Pending
    }

    /// Objective used for ranking.
    pub fn loss(&self) -> f64 {
        match self.status {
            TrialStatus::Complete => self.objective.unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }
}

/// Proposes the next configuration from the finished history.
pub trait SearchStrategy: Send + Sync {
    fn name(&self) -> &str;
    fn suggest(&self, space: &SearchSpace, history: &[Trial], rng: &mut dyn RngCore) -> Result<ConfigSample, TunerError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RandomSearch;

impl SearchStrategy for RandomSearch {
    fn name(&self) -> &str {
        "random"
    }
    fn suggest(&self, space: &SearchSpace, _history: &[Trial], rng: &mut dyn RngCore) -> Result<ConfigSample, TunerError> {
        suggest_random(space, rng)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Tpe {
    pub params: TpeParams,
}

impl SearchStrategy for Tpe {
    fn name(&self) -> &str {
        "tpe"
    }
    fn suggest(&self, space: &SearchSpace, history: &[Trial], rng: &mut dyn RngCore) -> Result<ConfigSample, TunerError> {
        suggest_tpe(space, history, &self.params, rng)
    }
}

/// Strategies by name.
#[derive(Clone, Default)]
pub struct StrategyRegistry {
    entries: BTreeMap<String, Arc<dyn SearchStrategy>>,
}

impl StrategyRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `random` and `tpe` with default parameters.
    pub fn with_builtins() -> Self {
        let mut r = Self::new();
        r.register(Arc::new(RandomSearch));
        r.register(Arc::new(Tpe::default()));
        r
    }

    /// Replaces any strategy already registered under the same name.
    pub fn register(&mut self, strategy: Arc<dyn SearchStrategy>) {
        self.entries.insert(strategy.name().to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn SearchStrategy>, TunerError> {
        self.entries.get(name).cloned().ok_or_else(|| TunerError::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}
