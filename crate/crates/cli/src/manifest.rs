use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

/// What is needed to rerun a command: the command line, the resolved
/// configuration, and the build that produced the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub version: String,
    pub timestamp_unix: u64,
    pub seed: Option<u64>,
    /// Recorded for completeness; results do not depend on it.
    pub workers: Option<usize>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        argv: &[String],
        config: serde_json::Value,
        seed: Option<u64>,
        workers: Option<usize>,
    ) -> Self {
        Self {
            command: command.to_string(),
            command_line: argv.to_vec(),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
            workers,
        }
    }
}
