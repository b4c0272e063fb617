//! Configuration-driven sweeps over the flash channel, written as long-form
//! CSV tables.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ConfigError, DetectorKind, ExperimentConfig, StudyMode};
pub use experiments::{
    load_code, run_coded_sweep, run_rber_sweep, run_training_size_study, train_source, HarnessError, SourceModel,
};
pub use output::{read_rows, resolve_output, save_rows, write_rows, Row, OUTPUT_DIR_ENV};
