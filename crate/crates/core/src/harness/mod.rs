//! Monte Carlo experiments: RMSE and detection-rate sweeps over SNR or
//! sensor count, a Cramér–Rao reference, CSV and gnuplot output, and a
//! solver timing probe.

mod complexity;
mod config;
mod crb;
mod metrics;
mod sweep;

pub use complexity::{complexity_probe, growth_exponent, ComplexityConfig, ComplexityRow};
pub use config::{ArraySpec, ExperimentConfig, MuRule, SceneSpec, Selection, Sweep};
pub use crb::{crb_mean_variance, crb_reference};
pub use metrics::{format_rmse, is_detected, pcd, rmse_db};
pub use sweep::{
    run_sweep, trials_header, write_aggregate_csv, write_outputs, write_plot_data, write_trials_csv, MetricRow,
    SweepOutput, TrialRecord, AGGREGATE_FILE, AGGREGATE_HEADER, METADATA_FILE, TRIALS_FILE,
};
