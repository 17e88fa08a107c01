//! Configuration, experiments and report output used by the CLI.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Experiment, ExperimentConfig, Replicas, TowerConfig};
pub use experiments::{
    exact_local_average_variance, mean_abs_weighted_sum, run_build_tower, run_folner_report, run_one_block,
    run_path_lemma, run_spectral_check, run_superexp, run_two_blocks,
};
pub use report::{emit_outputs, num, render_svg, Check, Plot, Report};
