//! Append-only event log, written as JSON lines.
//!
//! The first record is a header carrying the format version. Every evaluated
//! individual produces one `individual` record tagged with the role it played
//! in its layer's selection pool.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SearcherKind;
use crate::engine::individual::Origin;
use crate::error::{Error, Result};

pub const LOG_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndividualRecord {
    pub generation: u64,
    pub layer: usize,
    pub id: u64,
    pub origin: Origin,
    pub genome: String,
    pub objectives: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum Event {
    Header {
        format_version: u32,
        searcher: SearcherKind,
        seed: u64,
    },
    WarmUp {
        steps: u64,
        trained_steps: u64,
    },
    Individual(IndividualRecord),
    GenerationEnd {
        generation: u64,
        evaluations: u64,
        evaluations_in_generation: u64,
    },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Drops every event after the first `len`.
    pub fn truncate(&mut self, len: usize) {
        self.events.truncate(len);
    }

    pub fn individuals(&self) -> impl Iterator<Item = &IndividualRecord> {
        self.events.iter().filter_map(|e| match e {
            Event::Individual(r) => Some(r),
            _ => None,
        })
    }

    pub fn line(event: &Event) -> String {
        serde_json::to_string(event).expect("events serialize")
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&Self::line(e));
            out.push('\n');
        }
        out
    }

    pub fn write_range<W: Write>(&self, from: usize, out: &mut W) -> Result<()> {
        for e in &self.events[from.min(self.events.len())..] {
            writeln!(out, "{}", Self::line(e))?;
        }
        Ok(())
    }

    /// Parses a JSON-lines log, checking the header version.
    pub fn read<R: BufRead>(input: R) -> Result<Self> {
        let mut events = Vec::new();
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let event: Event = serde_json::from_str(&line)?;
            if let Event::Header { format_version, .. } = &event {
                if *format_version != LOG_FORMAT_VERSION {
                    return Err(Error::VersionMismatch {
                        what: "event log",
                        found: format_version.to_string(),
                        expected: LOG_FORMAT_VERSION,
                    });
                }
            }
            events.push(event);
        }
        Ok(Self { events })
    }

    /// SHA-256 of the JSON-lines rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }
}
