//! Exhaustive enumeration of small search spaces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::analysis::{hypervolume, pareto_front_indices};
use crate::engine::selection::dominates;
use crate::error::{Error, Result};
use crate::evaluation::{compose, Evaluator, FullArchitecture, ObjectiveVector, TabularBenchmark, SIZE};
use crate::genome::{enumerate_valid, CellShape, OpVocabulary};
use crate::par;

/// Default cap on the number of enumerated architectures.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Number of valid full architectures, `valid_cells^layers` (saturating).
pub fn space_size(shape: CellShape, layers: usize) -> u128 {
    let cells = shape.valid_cell_count();
    (0..layers).fold(1u128, |acc, _| acc.saturating_mul(cells))
}

/// Every valid full architecture, layer 0 varying slowest.
pub fn enumerate_architectures(shape: CellShape, layers: usize, cap: u128) -> Result<Vec<FullArchitecture>> {
    let size = space_size(shape, layers);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    let cells = enumerate_valid(shape);
    let mut out = Vec::with_capacity(size as usize);
    let mut cursor = vec![0usize; layers];
    loop {
        let picks: Vec<_> = cursor.iter().map(|&i| cells[i].clone()).collect();
        out.push(compose(&picks, layers)?);
        let mut pos = layers;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < cells.len() {
                break;
            }
            cursor[pos] = 0;
        }
    }
}

/// Evaluates every architecture of the space into a tabular benchmark.
pub fn build_table<E: Evaluator>(
    evaluator: &E,
    shape: CellShape,
    layers: usize,
    vocab: OpVocabulary,
    cap: u128,
) -> Result<TabularBenchmark> {
    let archs = enumerate_architectures(shape, layers, cap)?;
    let values = par::map_ordered(&archs, |a| evaluator.evaluate(a, None));
    let mut table = BTreeMap::new();
    for (arch, v) in archs.iter().zip(values) {
        table.insert(arch.key(), v?);
    }
    TabularBenchmark::new(shape, layers, vocab, evaluator.num_objectives(), table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontEntry {
    pub architecture: String,
    pub objectives: Vec<f64>,
}

/// The true Pareto front of a table, ordered by architecture key.
pub fn true_front(table: &TabularBenchmark) -> Vec<FrontEntry> {
    let entries: Vec<(&String, &ObjectiveVector)> = table.entries().collect();
    let points: Vec<&[f64]> = entries.iter().map(|(_, v)| v.values()).collect();
    pareto_front_indices(&points)
        .into_iter()
        .map(|i| FrontEntry {
            architecture: entries[i].0.clone(),
            objectives: entries[i].1.values().to_vec(),
        })
        .collect()
}

/// Reference point `(1.0, 1.1 * max size, 1.1 * max of further objectives)`.
pub fn reference_point(table: &TabularBenchmark) -> Vec<f64> {
    let mut reference = vec![1.0; table.num_objectives()];
    for m in SIZE..table.num_objectives() {
        let max = table
            .entries()
            .map(|(_, v)| v.values()[m])
            .fold(0.0f64, f64::max);
        reference[m] = 1.1 * max;
    }
    reference
}

pub fn front_hypervolume(front: &[FrontEntry], reference: &[f64]) -> f64 {
    let points: Vec<&[f64]> = front.iter().map(|e| e.objectives.as_slice()).collect();
    hypervolume(&points, reference)
}

/// True when no front member dominates another.
pub fn is_internally_nondominated(front: &[FrontEntry]) -> bool {
    front.iter().all(|a| {
        front
            .iter()
            .all(|b| !dominates(&a.objectives, &b.objectives))
    })
}
