//! Experiment orchestration: configuration, run manifests, heatmaps.

pub mod config;
pub mod heatmap;
pub mod pipeline;

pub use config::RunConfig;
pub use heatmap::{emit_heatmap, HeatmapGrid};
pub use pipeline::{replay, resolve_out_dir, run_experiment, Manifest, OUT_DIR_ENV};
