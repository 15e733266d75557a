//! Video classification pipelines with automated hyperparameter search.
//!
//! Pipelines are DAGs of registered primitives. A description binds
//! hyperparameters, `fit_pipeline` learns per-step state, and tuners search
//! the tunable hyperparameters against a validation objective.

pub mod dataio;
pub mod frames;
pub mod hyperspace;
pub mod pipeline;
pub mod seed;
pub mod table;
pub mod tuners;
pub mod workflow;
pub mod zoo;

pub use frames::{RawFrames, TensorFrames};
pub use table::Table;
