//! Batch front end: run flows and verification checks from TOML
//! configurations and write certified records.

pub mod aggregate;
pub mod config;
pub mod run;
pub mod verify;

use std::path::PathBuf;

/// Exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Every certificate held.
    Ok = 0,
    /// Configuration or runtime error.
    Error = 1,
    /// A certificate failed.
    Violation = 2,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] alexflow::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Flags shared by all commands; they override the configuration.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub tolerance: Option<f64>,
}

impl Overrides {
    /// Thread pool with the requested number of workers.
    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            if j == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            b = b.num_threads(j);
        }
        b.build().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn out_dir(&self, configured: Option<&PathBuf>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| configured.cloned())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

pub(crate) fn write_json(
    path: &std::path::Path,
    value: &serde_json::Value,
) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("json values serialize");
    std::fs::write(path, text + "\n")?;
    Ok(())
}
