//! Exit codes, error records and file helpers shared by the commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mpae::persist::write_atomic;
use mpae::{Error, Result};
use serde::Serialize;

/// Version of the JSON and CSV documents this binary writes.
pub const OUTPUT_FORMAT_VERSION: u32 = 1;

pub const EXIT_OTHER: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_EVALUATION: u8 = 4;
pub const EXIT_VERSION: u8 = 5;
pub const EXIT_CAP: u8 = 6;

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidShape(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        Error::MissingKey(_) | Error::AbsentState | Error::InvalidObjectives(_) | Error::Unevaluated(_) => {
            EXIT_EVALUATION
        }
        Error::VersionMismatch { .. } => EXIT_VERSION,
        Error::CapExceeded { .. } => EXIT_CAP,
        _ => EXIT_OTHER,
    }
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::InvalidShape(_) => "config",
        Error::Io(_) => "io",
        Error::MissingKey(_) | Error::AbsentState | Error::InvalidObjectives(_) | Error::Unevaluated(_) => {
            "evaluation"
        }
        Error::VersionMismatch { .. } => "version-mismatch",
        Error::CapExceeded { .. } => "cap-exceeded",
        Error::Parse(_) | Error::Json(_) => "parse",
        _ => "internal",
    }
}

/// One-line JSON error record for stderr.
pub fn error_record(e: &Error, code: u8) -> String {
    let mut record = serde_json::json!({
        "error": kind(e),
        "exit_code": code,
        "message": e.to_string(),
    });
    if let Error::CapExceeded { size, cap } = e {
        record["space_size"] = size.to_string().into();
        record["cap"] = cap.to_string().into();
    }
    record.to_string()
}

pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("MPAE_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("mpae-out"))
}

pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var("MPAE_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("MPAE_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

/// Seconds since the Unix epoch.
pub fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Small CSV builder. Every document starts with a `# format_version` line.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        let mut text = format!("# format_version {OUTPUT_FORMAT_VERSION}\n");
        text.push_str(&columns.join(","));
        text.push('\n');
        Self { text }
    }

    pub fn row(&mut self, fields: &[String]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            if f.contains([',', '"', '\n']) {
                let _ = write!(self.text, "\"{}\"", f.replace('"', "\"\""));
            } else {
                self.text.push_str(f);
            }
        }
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Float rendering used in every CSV: shortest round-trip form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
