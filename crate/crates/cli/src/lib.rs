//! Command-line front end for the biconservative surface pipeline.

pub mod commands;
pub mod config;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;

/// Builds the global work pool, capped by `BICONSERVE_THREADS` when set.
pub fn init_thread_pool() -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("BICONSERVE_THREADS") {
        let n: usize =
            value.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::Usage(format!("BICONSERVE_THREADS must be a positive integer, got `{value}`"))
            })?;
        builder = builder.num_threads(n);
    }
    builder.build_global().map_err(|e| CliError::Usage(e.to_string()))
}
