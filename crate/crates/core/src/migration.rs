//! Migration between layer populations.
//!
//! Each population keeps a small Pareto-selected archive. A receiving
//! population takes `floor(base_count / distance)` members from every other
//! archive, preferring the ones least similar to its own best members.

use serde::{Deserialize, Serialize};

use crate::engine::individual::{objective_slices, Individual, Origin, Population};
use crate::engine::selection::ParetoRanking;
use crate::error::{Error, Result};
use crate::evaluation::ERROR;
use crate::genome::{genome_dot, Genome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MigrationPolicy {
    /// Migrants offered by an adjacent population (distance 1).
    pub base_count: usize,
    /// Number of best target members the similarity is measured against.
    pub depth: usize,
    /// Cap on migrants entering one population per generation.
    pub max_total: usize,
}

impl Default for MigrationPolicy {
    fn default() -> Self {
        Self {
            base_count: 4,
            depth: 4,
            max_total: 16,
        }
    }
}

impl MigrationPolicy {
    pub fn disabled() -> Self {
        Self {
            base_count: 0,
            ..Self::default()
        }
    }

    /// Depth and cap are unused when nothing migrates, so a disabled policy
    /// always validates.
    pub fn validate(&self, archive_size: usize, population_size: usize) -> Result<()> {
        if self.base_count == 0 {
            return Ok(());
        }
        if self.depth == 0 || self.depth > archive_size {
            return Err(Error::Config(format!(
                "migration depth must lie in 1..={archive_size}, got {}",
                self.depth
            )));
        }
        if self.max_total > population_size {
            return Err(Error::Config(format!(
                "migration max_total {} exceeds the population size {population_size}",
                self.max_total
            )));
        }
        Ok(())
    }
}

/// Elite subset of one population offered to the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MigrationArchive<G = Genome> {
    pub owner_layer: usize,
    pub members: Vec<Individual<G>>,
}

impl<G> MigrationArchive<G> {
    pub fn new(owner_layer: usize) -> Self {
        Self {
            owner_layer,
            members: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Index of the archive-best member: first front, largest crowding
    /// distance, then lower error, then lower index.
    pub fn best_index(&self) -> Result<usize> {
        if self.members.is_empty() {
            return Err(Error::Config(format!("archive of layer {} is empty", self.owner_layer)));
        }
        let points = objective_slices(&self.members)?;
        let ranking = ParetoRanking::new(&points);
        let best = (0..points.len())
            .min_by(|&a, &b| {
                ranking
                    .compare(a, b)
                    .then(points[a][ERROR].total_cmp(&points[b][ERROR]))
                    .then(a.cmp(&b))
            })
            .expect("nonempty archive");
        Ok(best)
    }

    pub fn best(&self) -> Result<&Individual<G>> {
        Ok(&self.members[self.best_index()?])
    }
}

/// `|a - b|`; undefined for a layer and itself.
pub fn adjacent_distance(a: usize, b: usize) -> Result<usize> {
    if a == b {
        return Err(Error::SameLayer(a));
    }
    Ok(a.abs_diff(b))
}

/// Uncapped count `floor(base_count / distance)`.
pub fn migrant_count(policy: &MigrationPolicy, distance: usize) -> usize {
    if distance == 0 {
        return 0;
    }
    policy.base_count / distance
}

/// Migrants each source layer sends to `receiver`, as `(source, count)`
/// pairs in ascending source order, omitting zero counts.
///
/// Counts are limited by the source archive size. When the total would
/// exceed `max_total`, the budget goes to the nearest sources first (the
/// lower layer first on equal distance).
pub fn migrant_plan(
    policy: &MigrationPolicy,
    receiver: usize,
    archive_sizes: &[usize],
) -> Vec<(usize, usize)> {
    let mut sources: Vec<(usize, usize)> = (0..archive_sizes.len())
        .filter(|&a| a != receiver)
        .map(|a| (a.abs_diff(receiver), a))
        .collect();
    sources.sort_unstable();
    let mut remaining = policy.max_total;
    let mut plan = Vec::new();
    for (distance, source) in sources {
        let count = migrant_count(policy, distance)
            .min(archive_sizes[source])
            .min(remaining);
        if count > 0 {
            plan.push((source, count));
            remaining -= count;
        }
    }
    plan.sort_unstable();
    plan
}

/// Sum over objectives of per-objective min-max normalized values. Constant
/// objectives contribute 0.
pub fn normalized_objective_sums(points: &[&[f64]]) -> Vec<f64> {
    let Some(first) = points.first() else {
        return Vec::new();
    };
    let mut sums = vec![0.0; points.len()];
    for m in 0..first.len() {
        let lo = points.iter().map(|p| p[m]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[m]).fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            for (s, p) in sums.iter_mut().zip(points) {
                *s += (p[m] - lo) / (hi - lo);
            }
        }
    }
    sums
}

/// Indices of the `depth` members with the smallest normalized objective
/// sum, ties to the lower index.
pub fn best_by_objective_sum<G>(members: &[Individual<G>], depth: usize) -> Result<Vec<usize>> {
    if depth == 0 || depth > members.len() {
        return Err(Error::DepthOutOfRange {
            depth,
            size: members.len(),
        });
    }
    let points = objective_slices(members)?;
    let sums = normalized_objective_sums(&points);
    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by(|&a, &b| sums[a].total_cmp(&sums[b]).then(a.cmp(&b)));
    order.truncate(depth);
    Ok(order)
}

/// Elementwise bit sum of a population's best `depth` genomes; the reference
/// side of the similarity measure, computed once per target population.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimilarityReference {
    pub depth: usize,
    pub bit_sums: Vec<u32>,
}

impl SimilarityReference {
    pub fn new(target: &[Individual], depth: usize) -> Result<Self> {
        let best = best_by_objective_sum(target, depth)?;
        let len = target[best[0]].genome.len();
        let mut bit_sums = vec![0u32; len];
        for i in best {
            for (s, &b) in bit_sums.iter_mut().zip(target[i].genome.bits()) {
                *s += u32::from(b);
            }
        }
        Ok(Self { depth, bit_sums })
    }

    /// `dot(gen_a, bit_sums) / (depth * len)`.
    pub fn similarity(&self, gen_a: &Genome) -> Result<f64> {
        let dot = genome_dot(gen_a, &self.bit_sums)?;
        Ok(dot as f64 / (self.depth * gen_a.len()) as f64)
    }
}

/// Similarity of `gen_a` to the best `depth` members of `target`.
pub fn similarity(gen_a: &Genome, target: &[Individual], depth: usize) -> Result<f64> {
    SimilarityReference::new(target, depth)?.similarity(gen_a)
}

/// Archive indices of the `count` members least similar to `target`; ties go
/// to the better normalized objective sum within the archive, then the lower
/// index. Returned in selection order.
pub fn select_migrant_indices(
    source: &MigrationArchive,
    target: &[Individual],
    count: usize,
    depth: usize,
) -> Result<Vec<usize>> {
    if count > source.members.len() {
        return Err(Error::CountExceedsArchive {
            requested: count,
            available: source.members.len(),
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let reference = SimilarityReference::new(target, depth)?;
    let sims = source
        .members
        .iter()
        .map(|m| reference.similarity(&m.genome))
        .collect::<Result<Vec<_>>>()?;
    let sums = normalized_objective_sums(&objective_slices(&source.members)?);
    let mut order: Vec<usize> = (0..source.members.len()).collect();
    order.sort_by(|&a, &b| {
        sims[a]
            .total_cmp(&sims[b])
            .then(sums[a].total_cmp(&sums[b]))
            .then(a.cmp(&b))
    });
    order.truncate(count);
    Ok(order)
}

/// Clones of the selected archive members, tagged [`Origin::Migrant`] under
/// fresh ids and without evaluations.
pub fn select_migrants(
    source: &MigrationArchive,
    target: &[Individual],
    count: usize,
    depth: usize,
    next_id: &mut u64,
    generation: u64,
) -> Result<Vec<Individual>> {
    Ok(select_migrant_indices(source, target, count, depth)?
        .into_iter()
        .map(|i| {
            let m = source.members[i].reborn(*next_id, Origin::Migrant, generation);
            *next_id += 1;
            m
        })
        .collect())
}

/// Migrant pool for `receiver`, concatenated in ascending source-layer order.
pub fn build_migrant_pool(
    receiver: usize,
    populations: &[Population],
    policy: &MigrationPolicy,
    next_id: &mut u64,
    generation: u64,
) -> Result<Vec<Individual>> {
    let sizes: Vec<usize> = populations.iter().map(|p| p.archive.len()).collect();
    let mut pool = Vec::new();
    for (source, count) in migrant_plan(policy, receiver, &sizes) {
        pool.extend(select_migrants(
            &populations[source].archive,
            &populations[receiver].members,
            count,
            policy.depth,
            next_id,
            generation,
        )?);
    }
    Ok(pool)
}
