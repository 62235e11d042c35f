//! `mpae oracle` and `mpae gen-table`.

use std::path::{Path, PathBuf};

use mpae::config::{BackendKind, SearchConfig};
use mpae::evaluation::{Backend, SyntheticLandscape, TabularBenchmark};
use mpae::oracle::{self, FrontEntry};
use mpae::persist::write_atomic;
use mpae::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::{self, OUTPUT_FORMAT_VERSION};

pub const TABLE: &str = "table.txt";
pub const FRONT: &str = "front.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct OracleFront {
    pub format_version: u32,
    pub layers: usize,
    pub nodes: usize,
    pub ops: usize,
    pub space_size: u64,
    pub reference: Vec<f64>,
    pub hypervolume: f64,
    pub front: Vec<FrontEntry>,
}

/// Every architecture of the config's space scored by its exact backend.
pub fn exhaustive_table(config: &SearchConfig, cap: u128) -> Result<TabularBenchmark> {
    let shape = config.shape()?;
    let size = oracle::space_size(shape, config.layers);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let backend = match config.backend.kind {
        BackendKind::Surrogate => {
            return Err(Error::Config(
                "the oracle needs an exact backend (synthetic or tabular)".into(),
            ))
        }
        _ => config.build_backend()?,
    };
    oracle::build_table(&backend, shape, config.layers, config.vocab(), cap)
}

pub fn oracle_front(config: &SearchConfig, table: &TabularBenchmark) -> Result<OracleFront> {
    let front = oracle::true_front(table);
    if !oracle::is_internally_nondominated(&front) {
        return Err(Error::Parse("oracle front failed its nondominance self-check".into()));
    }
    let reference = oracle::reference_point(table);
    Ok(OracleFront {
        format_version: OUTPUT_FORMAT_VERSION,
        layers: config.layers,
        nodes: config.cell.nodes,
        ops: config.cell.ops,
        space_size: table.len() as u64,
        hypervolume: oracle::front_hypervolume(&front, &reference),
        reference,
        front,
    })
}

pub fn cmd_oracle(config_path: &Path, out: Option<PathBuf>, cap: u128) -> Result<()> {
    let config = SearchConfig::load(config_path)?;
    let out = output::output_dir(out);
    output::create_dir(&out)?;
    let table = exhaustive_table(&config, cap)?;
    let front = oracle_front(&config, &table)?;
    write_atomic(&out.join(TABLE), table.to_text().as_bytes())?;
    output::write_json(&out.join(FRONT), &front)
}

pub fn cmd_gen_table(config_path: &Path, out: &Path, cap: u128) -> Result<()> {
    let config = SearchConfig::load(config_path)?;
    let shape = config.shape()?;
    let landscape = SyntheticLandscape::new(shape, config.layers, config.vocab(), config.backend.landscape.clone());
    let table = oracle::build_table(&Backend::Synthetic(landscape), shape, config.layers, config.vocab(), cap)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        output::create_dir(dir)?;
    }
    write_atomic(out, table.to_text().as_bytes())
}
