//! Batch runner for bridgelab experiments.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;
pub mod sweep;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Violation};
pub use error::CliError;
pub use experiments::run_experiment;
pub use output::OutputDir;

/// Default output directory when neither the config nor the command line names one.
pub const DEFAULT_OUTPUT_DIR: &str = "bridgelab-out";

/// Caps the global rayon pool from `BRIDGELAB_THREADS`, if set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("BRIDGELAB_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| {
            CliError::Validation(vec![Violation {
                path: "BRIDGELAB_THREADS".into(),
                message: format!("expected a positive integer, got {v:?}"),
            }])
        })?;
        if n == 0 {
            return Err(CliError::Validation(vec![Violation {
                path: "BRIDGELAB_THREADS".into(),
                message: "must be at least 1".into(),
            }]));
        }
        // a pool may already exist when embedded; that is not an error
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}
