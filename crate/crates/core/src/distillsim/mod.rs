//! Desk-scale simulation of teacher -> assistant -> student distillation on
//! synthetic tasks whose answers are a function of a hidden rationale.

pub mod experiment;
pub mod model;
pub mod pipeline;
pub mod task;

pub use experiment::{run_experiment, CurveRow, CurveTable, ExperimentGrid, ExperimentName, ExperimentSummary};
pub use model::{train_model, train_model_on_scores, ClassSpec, FittedModel, SimModelClass};
pub use pipeline::{run_bridge, run_direct, PipelineConfig, PipelineKind, SelectionStrategy, SimRunResult};
pub use task::{gen_task, SimTask, TaskConfig};
