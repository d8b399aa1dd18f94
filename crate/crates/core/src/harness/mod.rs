//! Experiment orchestration: configuration, the training loop, learning-curve
//! summaries, sweeps and file output.

mod config;
mod metrics;
mod output;
mod run;
mod selfcheck;
mod sweep;

pub use config::{load_config, ExperimentConfig, ReportConfig, RunManifest, PRESETS};
pub use metrics::{
    block_means, convergence_episode, convergence_gain, gain_from_curves, gain_table, head_mean, return_gain,
    smoothed_returns, tail_len, tail_mean, AgentEpisode, EpisodeRow, GainTable, MetricsLog,
};
pub use output::{
    checkpoint_path, emit_outputs, read_metrics, write_gains, write_manifest, write_metrics, write_rounds,
    CONVERGENCE_METRIC, GAINS_HEADER, METRICS_HEADER, ROUNDS_HEADER,
};
pub use run::{checkpoint_of, joint_features, run_experiment, RoundRecord, RunOutput};
pub use selfcheck::{run_checks, CheckResult};
pub use sweep::{alpha_sweep, mode_curve, run_seeds, write_curves, Curve};
