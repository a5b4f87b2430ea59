//! Adversarial level curricula: regret estimators, the prioritized level
//! buffer, and the DR / PLR / ACCEL schedulers.

pub mod buffer;
pub mod estimators;
pub mod run;
pub mod schedule;

pub use buffer::{BufferEntry, InsertOutcome, LevelBuffer, DEFAULT_CAPACITY};
pub use estimators::{estimate, estimate_max_latest, estimate_neg_value, estimate_oracle_latest, Estimator};
pub use run::{metrics_to_string, read_metrics, train, write_metrics, EvalSets, MetricsRow, TrainSpec, METRICS_HEADER, TRAIN_SEED_LABELS};
pub use schedule::{accel_step, dr_step, plr_step, rollout_levels, step, AdversaryConfig, Cycle, Method, StepReport, UedState};
