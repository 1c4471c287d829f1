//! Scenario runner behind the `depol` binary.
//!
//! Every command reads one JSON [`config::ScenarioConfig`], writes its
//! artifacts with a fixed byte layout and returns a [`output::Status`] that
//! becomes the exit code: 0 pass, 1 invariant violation, 2 regime or fit warning.

pub mod algebra_check;
pub mod calibrate;
pub mod config;
pub mod error;
pub mod evolve;
pub mod micro;
pub mod output;
pub mod sphere;

pub use config::ScenarioConfig;
pub use error::{CliError, Result};
pub use output::Status;

/// Caps the global rayon pool when `DEPOL_THREADS` holds a positive integer.
pub fn init_thread_pool() {
    let Ok(raw) = std::env::var("DEPOL_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size the thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring DEPOL_THREADS={raw:?}; expected a positive integer"),
    }
}
