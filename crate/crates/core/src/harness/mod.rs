//! Experiment runner: configs, seeded runs, sweeps and CSV reductions.
//!
//! A run is a pure function of `(config, seed)`. Records, sweep tables and
//! reductions are comma-separated text with a header row and floats in
//! shortest round-trip form.

mod config;
mod oracle_report;
mod record;
mod reduce;
mod run;
mod sweep;

pub use config::{parse_pairs, Algorithm, EnvId, ExperimentConfig, FeatureSpec};
pub use oracle_report::{oracle_report, OracleReport};
pub use record::{RunRecord, Snapshot};
pub use reduce::{
    confidence_band, quantile_mean_csv, rolling_average, rolling_band_csv, ConfidenceBand,
    RollingMean,
};
pub use run::{behavior_policy, drive, finite_agent, pendulum_agent, run_experiment, run_with_rewards};
pub use sweep::{run_sweep, SweepRow, SweepSpec, SweepTable};
