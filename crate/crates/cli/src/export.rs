//! `mpae export`: genotype and archive dumps of a checkpoint.

use std::fmt::Write as _;
use std::path::Path;

use mpae::config::{SearchConfig, SearcherKind};
use mpae::engine::individual::{Chromosome, Individual, Origin, Population};
use mpae::genome::GenotypeExport;
use mpae::persist::{write_atomic, Checkpoint};
use mpae::search::SearchState;
use mpae::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::OUTPUT_FORMAT_VERSION;
use crate::ExportFormat;

#[derive(Debug, Serialize, Deserialize)]
pub struct MemberExport {
    pub id: u64,
    pub origin: Origin,
    /// Architecture the member was last scored as, with its objectives.
    pub architecture: Option<String>,
    pub objectives: Option<Vec<f64>>,
    /// One entry per cell the member carries.
    pub cells: Vec<GenotypeExport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PopulationExport {
    pub layer: usize,
    pub members: Vec<MemberExport>,
    pub archive: Vec<MemberExport>,
}

/// Readable view of a checkpoint plus the checkpoint itself, so the
/// document re-imports to the same run state.
#[derive(Debug, Serialize, Deserialize)]
pub struct ExportDocument {
    pub format_version: u32,
    pub searcher: SearcherKind,
    pub generation: u64,
    pub state_hash: String,
    pub populations: Vec<PopulationExport>,
    pub checkpoint: Checkpoint,
}

impl ExportDocument {
    pub fn new(checkpoint: Checkpoint) -> Result<Self> {
        let populations = match &checkpoint.state {
            SearchState::Cells(s) => populations(&s.populations, &checkpoint.config)?,
            SearchState::Global(s) => populations(&s.populations, &checkpoint.config)?,
        };
        Ok(Self {
            format_version: OUTPUT_FORMAT_VERSION,
            searcher: checkpoint.state.searcher(),
            generation: checkpoint.state.generation(),
            state_hash: checkpoint.state.hash(),
            populations,
            checkpoint,
        })
    }

    /// Parses an export and checks that its embedded state still hashes to
    /// the recorded value.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(OUTPUT_FORMAT_VERSION) => {}
            other => {
                return Err(Error::VersionMismatch {
                    what: "export",
                    found: other.map_or("missing".into(), |v| v.to_string()),
                    expected: OUTPUT_FORMAT_VERSION,
                })
            }
        }
        let doc: Self = serde_json::from_value(value)?;
        let hash = doc.checkpoint.state.hash();
        if hash != doc.state_hash {
            return Err(Error::Parse(format!(
                "export records state hash {} but its state hashes to {hash}",
                doc.state_hash
            )));
        }
        Ok(doc)
    }
}

fn member<G: Chromosome>(m: &Individual<G>, config: &SearchConfig) -> Result<MemberExport> {
    let vocab = config.vocab();
    Ok(MemberExport {
        id: m.id,
        origin: m.origin(),
        architecture: m.evaluation.as_ref().map(|e| e.architecture.clone()),
        objectives: m.evaluation.as_ref().map(|e| e.objectives.values().to_vec()),
        cells: m
            .genome
            .cells()
            .iter()
            .map(|g| GenotypeExport::new(g, &vocab))
            .collect::<Result<_>>()?,
    })
}

fn populations<G: Chromosome>(pops: &[Population<G>], config: &SearchConfig) -> Result<Vec<PopulationExport>> {
    pops.iter()
        .map(|p| {
            Ok(PopulationExport {
                layer: p.layer_index,
                members: p.members.iter().map(|m| member(m, config)).collect::<Result<_>>()?,
                archive: p.archive.members.iter().map(|m| member(m, config)).collect::<Result<_>>()?,
            })
        })
        .collect()
}

fn render_member(out: &mut String, m: &MemberExport) {
    let objectives = m
        .objectives
        .as_ref()
        .map(|o| o.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "))
        .unwrap_or_else(|| "unevaluated".into());
    let _ = writeln!(out, "  #{} {} [{objectives}]", m.id, m.origin);
    for (c, cell) in m.cells.iter().enumerate() {
        let nodes: Vec<String> = cell
            .cell
            .iter()
            .enumerate()
            .map(|(n, edges)| {
                let inputs: Vec<String> = edges.iter().map(|e| format!("{}({})", e.op, e.source)).collect();
                format!("n{}={}", n + 2, inputs.join("+"))
            })
            .collect();
        let _ = writeln!(out, "    cell {c}: {}", nodes.join(" "));
    }
}

pub fn render_text(doc: &ExportDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# format_version {} searcher {} generation {} state {}",
        doc.format_version, doc.searcher, doc.generation, doc.state_hash
    );
    for p in &doc.populations {
        let _ = writeln!(out, "population {} ({} members)", p.layer, p.members.len());
        for m in &p.members {
            render_member(&mut out, m);
        }
        let _ = writeln!(out, "archive {} ({} members)", p.layer, p.archive.len());
        for m in &p.archive {
            render_member(&mut out, m);
        }
    }
    out
}

pub fn cmd_export(checkpoint: &Path, format: ExportFormat, out: Option<&Path>) -> Result<()> {
    let doc = ExportDocument::new(Checkpoint::read(checkpoint)?)?;
    let text = match format {
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
        ExportFormat::Text => render_text(&doc),
    };
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn cmd_check(path: &Path) -> Result<()> {
    let doc = ExportDocument::from_json(&std::fs::read_to_string(path)?)?;
    println!(
        "{}",
        serde_json::json!({
            "format_version": OUTPUT_FORMAT_VERSION,
            "searcher": doc.searcher,
            "generation": doc.generation,
            "state_hash": doc.state_hash,
        })
    );
    Ok(())
}
