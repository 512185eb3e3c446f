//! Two-stage, decision-focused and surrogate training, evaluation by regret
//! and wall-clock time, and the multi-seed experiment runner.

mod checkpoint;
mod config;
mod evaluate;
mod experiment;
mod task;
mod tasks;
mod train;

pub use checkpoint::{checkpoint_rows, load_checkpoint, save_checkpoint};
pub use config::{
    DomainConfig, DomainKind, ExperimentConfig, Method, TrainConfig, DEFAULT_SEED_COUNT,
};
pub use evaluate::{evaluate, oracle_values, Evaluation};
pub use experiment::{
    aggregate, default_checkpoint, eval_checkpoint, movierec_data, movierec_task, portfolio_data,
    portfolio_task, run_experiment, run_experiment_in_memory, run_method, train_single,
    AggregateRow, ExperimentReport, RunRecord, AGGREGATE_HEADER, AGGREGATE_NONDETERMINISTIC_NOTE,
    NONDETERMINISTIC_NOTE, REPORT_HEADER,
};
pub use task::{
    decide, final_decision, instance_gradient, relaxed_decision, Decision, DecisionPath,
    DecisionTask, InstanceGradient, Solved,
};
pub use tasks::{MovieRecTask, PortfolioModel, PortfolioPrediction, PortfolioTask};
pub use train::{
    fit, init_for, train_decision_focused, train_surrogate, train_two_stage, validation_score,
    Trained,
};
