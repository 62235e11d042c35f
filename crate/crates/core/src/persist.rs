//! Versioned checkpoint files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::{Error, Result};
use crate::search::SearchState;

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: SearchConfig,
    pub state: SearchState,
}

impl Checkpoint {
    pub fn new(config: SearchConfig, state: SearchState) -> Self {
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            config,
            state,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    /// Parses a checkpoint. Anything without a readable, supported
    /// `format_version` is a version mismatch.
    pub fn from_json(text: &str) -> Result<Self> {
        let mismatch = |found: String| Error::VersionMismatch {
            what: "checkpoint",
            found,
            expected: CHECKPOINT_FORMAT_VERSION,
        };
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|_| mismatch("unreadable".into()))?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(CHECKPOINT_FORMAT_VERSION) => {}
            Some(v) => return Err(mismatch(v.to_string())),
            None => return Err(mismatch("missing".into())),
        }
        Ok(serde_json::from_value(value)?)
    }

    /// Writes through a temporary file and a rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Writes `bytes` to `path` via a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
