//! Offspring generation: binary tournament, per-node connection crossover and
//! per-node random reassignment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::individual::{objective_slices, Chromosome, Individual, Origin};
use super::selection::ParetoRanking;
use crate::error::{Error, Result};

/// Per-node probabilities of the two genetic operators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneticRates {
    pub crossover: f64,
    pub mutation: f64,
}

impl Default for GeneticRates {
    fn default() -> Self {
        Self {
            crossover: 0.25,
            mutation: 0.25,
        }
    }
}

/// Bernoulli trial and success counts of the operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorStats {
    pub crossover_trials: u64,
    pub crossover_events: u64,
    pub mutation_trials: u64,
    pub mutation_events: u64,
}

impl OperatorStats {
    pub fn merge(&mut self, other: &OperatorStats) {
        self.crossover_trials += other.crossover_trials;
        self.crossover_events += other.crossover_events;
        self.mutation_trials += other.mutation_trials;
        self.mutation_events += other.mutation_events;
    }
}

/// Binary tournament under the crowded comparison; ties go to the first draw.
pub fn binary_tournament<R: Rng + ?Sized>(ranking: &ParetoRanking, rng: &mut R) -> usize {
    let n = ranking.rank.len();
    let a = rng.gen_range(0..n);
    let b = rng.gen_range(0..n);
    if ranking.compare(b, a).is_lt() {
        b
    } else {
        a
    }
}

/// Produces `count` offspring from evaluated `parents`.
///
/// Parents are drawn in pairs by binary tournament. For every node the pair
/// swaps that node's segment with probability `rates.crossover`; then every
/// node of each child is regenerated with probability `rates.mutation`.
/// Children are repaired and tagged [`Origin::Offspring`]. Ids are taken
/// from `next_id`.
pub fn genetic_manipulation<G: Chromosome, R: Rng + ?Sized>(
    parents: &[Individual<G>],
    count: usize,
    rates: GeneticRates,
    next_id: &mut u64,
    generation: u64,
    rng: &mut R,
) -> Result<(Vec<Individual<G>>, OperatorStats)> {
    if parents.is_empty() {
        return Err(Error::Config("genetic manipulation needs parents".into()));
    }
    let points = objective_slices(parents)?;
    let ranking = ParetoRanking::new(&points);
    let mut stats = OperatorStats::default();
    let mut offspring = Vec::with_capacity(count);
    while offspring.len() < count {
        let a = binary_tournament(&ranking, rng);
        let b = binary_tournament(&ranking, rng);
        let mut first = parents[a].genome.clone();
        let mut second = parents[b].genome.clone();
        for node in 0..first.node_count() {
            stats.crossover_trials += 1;
            if rng.gen_bool(rates.crossover) {
                stats.crossover_events += 1;
                first.swap_node(&mut second, node);
            }
        }
        for mut child in [first, second] {
            if offspring.len() == count {
                break;
            }
            for node in 0..child.node_count() {
                stats.mutation_trials += 1;
                if rng.gen_bool(rates.mutation) {
                    stats.mutation_events += 1;
                    child.randomize_node(node, rng);
                }
            }
            let child = child.repaired(rng);
            offspring.push(Individual::new(*next_id, child, Origin::Offspring, generation));
            *next_id += 1;
        }
    }
    Ok((offspring, stats))
}
