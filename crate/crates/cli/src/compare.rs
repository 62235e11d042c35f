//! `mpae compare`: a config-by-seed matrix of runs and its summary tables.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mpae::analysis::{
    best_error, checkpoint_generations, convergence, mann_whitney, median, origin_counts, origin_summary,
    ConvergencePoint,
};
use mpae::config::{SearchConfig, SearcherKind};
use mpae::engine::individual::Origin;
use mpae::evaluation::SIZE;
use mpae::log::{Event, EventLog};
use mpae::search::Search;
use mpae::{par, Error, Result};
use serde::{Deserialize, Serialize};

use crate::output::{self, num, opt_num, Csv, OUTPUT_FORMAT_VERSION};
use crate::tables;

pub const RUNS: &str = "runs.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const ORIGINS: &str = "origins.csv";
pub const MANN_WHITNEY: &str = "mann_whitney.csv";
pub const SUMMARY: &str = "compare.json";

#[derive(Debug, Serialize, Deserialize)]
pub struct CompareSummary {
    pub format_version: u32,
    pub labels: Vec<String>,
    pub searchers: Vec<SearcherKind>,
    pub seeds: Vec<u64>,
    pub reference: Vec<f64>,
    /// Hypervolume of the true front, when the space could be enumerated.
    pub oracle_hypervolume: Option<f64>,
    pub failed_runs: usize,
}

/// `0,1,5` or the half-open range `0..20`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("cannot parse seeds {text:?}"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    text.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

/// File stems, suffixed with their position when two stems collide.
fn labels(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| p.file_stem().map_or("config".into(), |s| s.to_string_lossy().into_owned()))
        .collect();
    stems
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if stems.iter().filter(|t| *t == s).count() > 1 {
                format!("{s}-{i}")
            } else {
                s.clone()
            }
        })
        .collect()
}

struct Cell {
    config: usize,
    seed: u64,
}

struct Finished {
    log: EventLog,
    generations: u64,
    evaluations: u64,
}

fn run_cell(config: &SearchConfig, seed: u64) -> Result<Finished> {
    let mut search = Search::from_config(SearchConfig {
        seed,
        ..config.clone()
    })?;
    search.run()?;
    Ok(Finished {
        generations: search.generation(),
        evaluations: search.evaluations(),
        log: search.log().clone(),
    })
}

/// Evaluations per generation as logged by the generation-end events.
fn pool_sizes(log: &EventLog) -> BTreeMap<u64, u64> {
    log.events()
        .iter()
        .filter_map(|e| match e {
            Event::GenerationEnd {
                generation,
                evaluations_in_generation,
                ..
            } => Some((*generation, *evaluations_in_generation)),
            _ => None,
        })
        .collect()
}

pub fn cmd_compare(config_paths: &[PathBuf], seeds: &str, out: Option<PathBuf>, cap: u128) -> Result<()> {
    let seeds = parse_seeds(seeds)?;
    if config_paths.len() < 2 || seeds.len() < 2 {
        return Err(Error::Config("compare needs at least two configs and two seeds".into()));
    }
    let configs = config_paths
        .iter()
        .map(|p| SearchConfig::load(p))
        .collect::<Result<Vec<_>>>()?;
    let labels = labels(config_paths);
    let out = output::output_dir(out);
    output::create_dir(&out)?;

    let cells: Vec<Cell> = (0..configs.len())
        .flat_map(|config| seeds.iter().map(move |&seed| Cell { config, seed }))
        .collect();
    let results = par::map_ordered(&cells, |c| run_cell(&configs[c.config], c.seed));

    let (reference, oracle_hypervolume) = match tables::exhaustive_table(&configs[0], cap) {
        Ok(table) => {
            let front = tables::oracle_front(&configs[0], &table)?;
            (front.reference, Some(front.hypervolume))
        }
        Err(Error::CapExceeded { .. } | Error::Config(_)) => (observed_reference(&results), None),
        Err(e) => return Err(e),
    };
    let curves: Vec<Option<Vec<ConvergencePoint>>> = results
        .iter()
        .map(|r| r.as_ref().ok().map(|f| convergence(&f.log, &reference)))
        .collect();
    let fraction = |hv: f64| oracle_hypervolume.map(|o| num(hv / o)).unwrap_or_default();

    let mut runs = Csv::new(&[
        "label",
        "searcher",
        "seed",
        "status",
        "generations",
        "evaluations",
        "best_error",
        "hypervolume",
        "hypervolume_fraction",
        "message",
    ]);
    let mut conv = Csv::new(&[
        "label",
        "searcher",
        "seed",
        "generation",
        "evaluations",
        "best_error",
        "hypervolume",
        "hypervolume_fraction",
    ]);
    let mut origins = Csv::new(&[
        "label",
        "searcher",
        "seed",
        "generation",
        "initial",
        "offspring",
        "migrant",
        "parent_carryover",
        "pool_size",
        "migrant_median",
        "offspring_median",
    ]);
    let mut best: Vec<Vec<f64>> = vec![Vec::new(); configs.len()];
    let mut failed_runs = 0;
    for ((cell, result), curve) in cells.iter().zip(&results).zip(&curves) {
        let label = labels[cell.config].clone();
        let searcher = configs[cell.config].searcher.to_string();
        let key = [label.clone(), searcher.clone(), cell.seed.to_string()];
        let (run, curve) = match (result, curve) {
            (Ok(run), Some(curve)) => (run, curve),
            (Err(e), _) => {
                failed_runs += 1;
                let mut row = key.to_vec();
                row.extend(["failed".into(), String::new(), String::new(), String::new()]);
                row.extend([String::new(), String::new(), e.to_string()]);
                runs.row(&row);
                continue;
            }
            _ => unreachable!("curves exist for every finished run"),
        };
        let last_hv = curve.last().map_or(0.0, |p| p.hypervolume);
        let run_best = best_error(&run.log);
        best[cell.config].push(run_best);
        let mut row = key.to_vec();
        row.extend([
            "ok".into(),
            run.generations.to_string(),
            run.evaluations.to_string(),
            num(run_best),
            num(last_hv),
            fraction(last_hv),
            String::new(),
        ]);
        runs.row(&row);
        for p in curve {
            let mut row = key.to_vec();
            row.extend([
                p.generation.to_string(),
                p.evaluations.to_string(),
                num(p.best_error),
                num(p.hypervolume),
                fraction(p.hypervolume),
            ]);
            conv.row(&row);
        }
        let pools = pool_sizes(&run.log);
        let mut checkpoints = checkpoint_generations(run.generations).to_vec();
        checkpoints.dedup();
        for g in checkpoints.into_iter().filter(|g| pools.contains_key(g)) {
            let counts = origin_counts(&run.log, g);
            let summary = origin_summary(&run.log, g);
            let count = |o: Origin| counts.get(&o).copied().unwrap_or(0).to_string();
            let mut row = key.to_vec();
            row.extend([
                g.to_string(),
                count(Origin::Initial),
                count(Origin::Offspring),
                count(Origin::Migrant),
                count(Origin::ParentCarryover),
                pools[&g].to_string(),
                opt_num(summary.migrant_median),
                opt_num(summary.offspring_median),
            ]);
            origins.row(&row);
        }
    }

    let mut mw = Csv::new(&[
        "label_a", "label_b", "n_a", "n_b", "median_a", "median_b", "u", "z", "p_less",
    ]);
    for a in 0..configs.len() {
        for b in 0..configs.len() {
            if a == b || best[a].is_empty() || best[b].is_empty() {
                continue;
            }
            let test = mann_whitney(&best[a], &best[b]);
            mw.row(&[
                labels[a].clone(),
                labels[b].clone(),
                best[a].len().to_string(),
                best[b].len().to_string(),
                opt_num(median(&best[a])),
                opt_num(median(&best[b])),
                num(test.u),
                num(test.z),
                num(test.p_less),
            ]);
        }
    }

    runs.write(&out.join(RUNS))?;
    conv.write(&out.join(CONVERGENCE))?;
    origins.write(&out.join(ORIGINS))?;
    mw.write(&out.join(MANN_WHITNEY))?;
    output::write_json(
        &out.join(SUMMARY),
        &CompareSummary {
            format_version: OUTPUT_FORMAT_VERSION,
            labels,
            searchers: configs.iter().map(|c| c.searcher).collect(),
            seeds,
            reference,
            oracle_hypervolume,
            failed_runs,
        },
    )
}

/// `(1.0, 1.1 * largest observed size, ...)` over every finished run.
fn observed_reference(results: &[Result<Finished>]) -> Vec<f64> {
    let mut reference: Vec<f64> = Vec::new();
    for r in results.iter().flatten() {
        for rec in r.log.individuals() {
            if reference.is_empty() {
                reference = vec![1.0; rec.objectives.len()];
                reference[SIZE..].iter_mut().for_each(|v| *v = 0.0);
            }
            for (m, v) in rec.objectives.iter().enumerate().skip(SIZE) {
                reference[m] = reference[m].max(1.1 * v);
            }
        }
    }
    if reference.is_empty() {
        reference = vec![1.0, 1.0];
    }
    for v in reference.iter_mut().skip(SIZE) {
        if *v <= 0.0 {
            *v = 1.0;
        }
    }
    reference
}
