//! `mpae search`: one run with manifest, event log, Pareto CSV, checkpoints
//! and final front.

use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mpae::analysis::FrontArchive;
use mpae::config::{BackendKind, SearchConfig, SearcherKind};
use mpae::engine::Engine;
use mpae::evaluation::{ERROR, SIZE};
use mpae::genome::{Genome, GenotypeExport, GENOTYPE_FORMAT_VERSION};
use mpae::log::{Event, EventLog, LOG_FORMAT_VERSION};
use mpae::persist::{Checkpoint, CHECKPOINT_FORMAT_VERSION};
use mpae::search::Search;
use mpae::evaluation::TABULAR_FORMAT_VERSION;
use mpae::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::{self, num, Csv, OUTPUT_FORMAT_VERSION};

pub const MANIFEST: &str = "manifest.json";
pub const EVENTS: &str = "events.jsonl";
pub const PARETO: &str = "pareto.csv";
pub const CHECKPOINT: &str = "checkpoint.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const FINAL_FRONT: &str = "final_front.json";
pub const RUN_COMPLETE: &str = "run_complete.json";

pub struct SearchArgs {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resume: bool,
    pub keep_checkpoints: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FormatVersions {
    pub event_log: u32,
    pub checkpoint: u32,
    pub genotype: u32,
    pub tabular: u32,
    pub outputs: u32,
}

impl FormatVersions {
    pub fn current() -> Self {
        Self {
            event_log: LOG_FORMAT_VERSION,
            checkpoint: CHECKPOINT_FORMAT_VERSION,
            genotype: GENOTYPE_FORMAT_VERSION,
            tabular: TABULAR_FORMAT_VERSION,
            outputs: OUTPUT_FORMAT_VERSION,
        }
    }
}

/// Written once before the first generation and never rewritten.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub searcher: SearcherKind,
    pub backend: BackendKind,
    pub seed: u64,
    pub started_at: u64,
    pub formats: FormatVersions,
    pub outputs: Vec<String>,
    pub config: SearchConfig,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunComplete {
    pub format_version: u32,
    pub finished_at: u64,
    pub generations: u64,
    pub evaluations: u64,
    pub evaluations_per_generation: Vec<u64>,
    pub event_log_sha256: String,
    pub state_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FrontRecord {
    pub architecture: String,
    pub objectives: Vec<f64>,
    pub cells: Vec<GenotypeExport>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FinalFront {
    pub format_version: u32,
    pub searcher: SearcherKind,
    pub seed: u64,
    pub generations: u64,
    pub evaluations: u64,
    pub front: Vec<FrontRecord>,
}

fn resolve_config(path: Option<&Path>, seed: Option<u64>) -> Result<SearchConfig> {
    let path = path.ok_or_else(|| Error::Config("--config is required unless --resume is given".into()))?;
    let mut config = SearchConfig::load(path)?;
    if let Some(seed) = seed.or(output::env_seed()?) {
        config.seed = seed;
    }
    Ok(config)
}

pub fn cmd_search(args: SearchArgs) -> Result<()> {
    let out = output::output_dir(args.out);
    output::create_dir(&out)?;
    let mut search = if args.resume {
        resume(&out, args.config.as_deref(), args.seed)?
    } else {
        let config = resolve_config(args.config.as_deref(), args.seed)?;
        start(&out, config)?
    };
    let mut written = search.log().len();
    if !search.warmed_up() {
        let warm = search.warm_up();
        written = persist(&out, &search, written, args.keep_checkpoints)?;
        warm?;
    }
    while search.can_continue() {
        let step = search.step();
        written = persist(&out, &search, written, args.keep_checkpoints)?;
        step?;
    }
    finish(&out, &search)
}

fn start(out: &Path, config: SearchConfig) -> Result<Search> {
    let search = Search::from_config(config.clone())?;
    let manifest = RunManifest {
        format_version: OUTPUT_FORMAT_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        searcher: config.searcher,
        backend: config.backend.kind,
        seed: config.seed,
        started_at: output::unix_time(),
        formats: FormatVersions::current(),
        outputs: [MANIFEST, EVENTS, PARETO, CHECKPOINT, FINAL_FRONT, RUN_COMPLETE]
            .map(String::from)
            .to_vec(),
        config,
    };
    output::write_json(&out.join(MANIFEST), &manifest)?;
    mpae::persist::write_atomic(&out.join(EVENTS), search.log().to_jsonl().as_bytes())?;
    write_checkpoint(out, &search)?;
    Ok(search)
}

fn resume(out: &Path, config_path: Option<&Path>, seed: Option<u64>) -> Result<Search> {
    let checkpoint = Checkpoint::read(&out.join(CHECKPOINT))?;
    if let Some(path) = config_path {
        let mut given = resolve_config(Some(path), None)?;
        given.seed = seed.unwrap_or(checkpoint.config.seed);
        if given != checkpoint.config {
            return Err(Error::Config(format!(
                "{} differs from the config stored in the checkpoint",
                path.display()
            )));
        }
    } else if seed.is_some_and(|s| s != checkpoint.config.seed) {
        return Err(Error::Config("--seed differs from the checkpointed seed".into()));
    }
    let log = EventLog::read(BufReader::new(File::open(out.join(EVENTS))?))?;
    let engine = Engine::from_config(checkpoint.config)?;
    let search = Search::resume(engine, checkpoint.state, log)?;
    mpae::persist::write_atomic(&out.join(EVENTS), search.log().to_jsonl().as_bytes())?;
    Ok(search)
}

fn write_checkpoint(out: &Path, search: &Search) -> Result<()> {
    Checkpoint::new(search.config().clone(), search.state().clone()).write(&out.join(CHECKPOINT))
}

/// Appends new events, refreshes the Pareto CSV and checkpoints. Returns the
/// number of events now on disk.
fn persist(out: &Path, search: &Search, written: usize, keep_every: u64) -> Result<usize> {
    let log = search.log();
    let mut file = BufWriter::new(OpenOptions::new().append(true).open(out.join(EVENTS))?);
    log.write_range(written, &mut file)?;
    file.flush()?;
    pareto_csv(log).write(&out.join(PARETO))?;
    write_checkpoint(out, search)?;
    let generation = search.generation();
    if keep_every > 0 && generation > 0 && generation % keep_every == 0 {
        let dir = out.join(CHECKPOINT_DIR);
        output::create_dir(&dir)?;
        Checkpoint::new(search.config().clone(), search.state().clone())
            .write(&dir.join(format!("generation-{generation:04}.json")))?;
    }
    Ok(log.len())
}

/// Nondominated set of all evaluations so far, after warm-up (generation 0)
/// and after every generation.
pub fn pareto_csv(log: &EventLog) -> Csv {
    let objectives = log.individuals().next().map_or(2, |r| r.objectives.len());
    let mut columns = vec!["generation".to_string(), "evaluations".into(), "error".into(), "size".into()];
    columns.extend((2..objectives).map(|m| format!("objective_{m}")));
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&columns);
    let mut front = FrontArchive::new();
    let mut evaluations = 0u64;
    for event in log.events() {
        let generation = match event {
            Event::Individual(r) => {
                evaluations += 1;
                front.insert(&r.objectives);
                continue;
            }
            Event::WarmUp { .. } => 0,
            Event::GenerationEnd { generation, .. } => *generation,
            Event::Header { .. } => continue,
        };
        let mut points = front.points().to_vec();
        points.sort_by(|a, b| a[ERROR].total_cmp(&b[ERROR]).then(a[SIZE].total_cmp(&b[SIZE])));
        for p in points {
            let mut row = vec![generation.to_string(), evaluations.to_string()];
            row.extend(p.iter().map(|&v| num(v)));
            csv.row(&row);
        }
    }
    csv
}

fn finish(out: &Path, search: &Search) -> Result<()> {
    let config = search.config();
    let shape = config.shape()?;
    let vocab = config.vocab();
    let front = search
        .final_front()?
        .into_iter()
        .map(|f| {
            let cells = f
                .cells
                .iter()
                .map(|hex| GenotypeExport::new(&Genome::from_hex(shape, hex)?, &vocab))
                .collect::<Result<Vec<_>>>()?;
            Ok(FrontRecord {
                architecture: f.architecture,
                objectives: f.objectives,
                cells,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    output::write_json(
        &out.join(FINAL_FRONT),
        &FinalFront {
            format_version: OUTPUT_FORMAT_VERSION,
            searcher: config.searcher,
            seed: config.seed,
            generations: search.generation(),
            evaluations: search.evaluations(),
            front,
        },
    )?;
    output::write_json(
        &out.join(RUN_COMPLETE),
        &RunComplete {
            format_version: OUTPUT_FORMAT_VERSION,
            finished_at: output::unix_time(),
            generations: search.generation(),
            evaluations: search.evaluations(),
            evaluations_per_generation: search.evaluations_per_generation().to_vec(),
            event_log_sha256: search.log().hash(),
            state_hash: search.state_hash(),
        },
    )
}
