//! Experiment harness: configuration, twin-experiment assembly, error and
//! RMSE metrics, the sweep/variance/scale-up studies, and CSV emission.
//!
//! The harness turns one [`ExperimentConfig`] into runnable filtering
//! problems over the shallow-water testbed and reduces their results to flat
//! report tables that the command-line driver writes out. Everything here is
//! deterministic given the configuration (timing measurements excepted).

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod metrics;
pub mod twin;

pub use config::{ExperimentConfig, P0Mode, WindowSpec};
pub use csvio::{CsvDoc, CsvField};
pub use experiments::{
    compare_run, ddkf_run_report, default_overlap_values, default_time_overlap_values,
    kf_run_report, overlap_sweep_csv, scaleup_from_cubics, scaleup_run, sweep_overlap, sweep_time,
    time_sweep_csv, two_window_layout, variance_study, CompareReport, CompareRow,
    ScaleupMeasurement, VarianceStudy, NORM_NOTE,
};
pub use metrics::{max_abs_dev, rmse, rmse_series};
pub use twin::TwinSetup;
