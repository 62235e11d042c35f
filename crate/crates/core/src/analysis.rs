//! Post-run statistics: hypervolume, convergence curves, origin summaries
//! and the Mann-Whitney U test.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::individual::Origin;
use crate::engine::selection::{dominates, nondominated_fronts};
use crate::evaluation::ERROR;
use crate::log::{Event, EventLog};
use crate::migration::normalized_objective_sums;

/// Hypervolume dominated by `points` and bounded by `reference`
/// (minimization). Points not strictly better than the reference in every
/// objective contribute nothing.
pub fn hypervolume(points: &[&[f64]], reference: &[f64]) -> f64 {
    let inside: Vec<Vec<f64>> = points
        .iter()
        .filter(|p| p.iter().zip(reference).all(|(x, r)| x < r))
        .map(|p| p.to_vec())
        .collect();
    slice_volume(inside, reference)
}

fn slice_volume(mut points: Vec<Vec<f64>>, reference: &[f64]) -> f64 {
    let m = reference.len();
    if points.is_empty() {
        return 0.0;
    }
    match m {
        1 => reference[0] - points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
        2 => {
            points.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
            let mut volume = 0.0;
            let mut floor = reference[1];
            for p in &points {
                if p[1] < floor {
                    volume += (reference[0] - p[0]) * (floor - p[1]);
                    floor = p[1];
                }
            }
            volume
        }
        _ => {
            // sweep the last objective; each slab is the (m-1)-volume of the
            // points already passed
            points.sort_by(|a, b| a[m - 1].total_cmp(&b[m - 1]));
            let mut volume = 0.0;
            for i in 0..points.len() {
                let top = if i + 1 < points.len() {
                    points[i + 1][m - 1]
                } else {
                    reference[m - 1]
                };
                let depth = top - points[i][m - 1];
                if depth > 0.0 {
                    let slab: Vec<Vec<f64>> = points[..=i].iter().map(|p| p[..m - 1].to_vec()).collect();
                    volume += depth * slice_volume(slab, &reference[..m - 1]);
                }
            }
            volume
        }
    }
}

/// Indices of the nondominated points.
pub fn pareto_front_indices(points: &[&[f64]]) -> Vec<usize> {
    nondominated_fronts(points).into_iter().next().unwrap_or_default()
}

/// Incrementally maintained nondominated set (duplicates kept once).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FrontArchive {
    points: Vec<Vec<f64>>,
}

impl FrontArchive {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `p`; returns whether it entered the front.
    pub fn insert(&mut self, p: &[f64]) -> bool {
        if self.points.iter().any(|q| q == p || dominates(q, p)) {
            return false;
        }
        self.points.retain(|q| !dominates(p, q));
        self.points.push(p.to_vec());
        true
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn hypervolume(&self, reference: &[f64]) -> f64 {
        let refs: Vec<&[f64]> = self.points.iter().map(Vec::as_slice).collect();
        hypervolume(&refs, reference)
    }
}

/// State of a run at the end of warm-up (generation 0) and after every
/// generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub generation: u64,
    pub evaluations: u64,
    pub best_error: f64,
    pub hypervolume: f64,
}

/// Best error and attained-front hypervolume against evaluator calls, over
/// every evaluation recorded in `log`.
pub fn convergence(log: &EventLog, reference: &[f64]) -> Vec<ConvergencePoint> {
    let mut front = FrontArchive::new();
    let mut evaluations = 0u64;
    let mut best = f64::INFINITY;
    let mut out = Vec::new();
    for event in log.events() {
        match event {
            Event::Individual(r) => {
                evaluations += 1;
                best = best.min(r.objectives[ERROR]);
                front.insert(&r.objectives);
            }
            Event::WarmUp { .. } => out.push(ConvergencePoint {
                generation: 0,
                evaluations,
                best_error: best,
                hypervolume: front.hypervolume(reference),
            }),
            Event::GenerationEnd { generation, .. } => out.push(ConvergencePoint {
                generation: *generation,
                evaluations,
                best_error: best,
                hypervolume: front.hypervolume(reference),
            }),
            Event::Header { .. } => {}
        }
    }
    out
}

/// Lowest error over every evaluation in the log.
pub fn best_error(log: &EventLog) -> f64 {
    log.individuals()
        .map(|r| r.objectives[ERROR])
        .fold(f64::INFINITY, f64::min)
}

/// Nondominated set of every evaluation in the log.
pub fn attained_front(log: &EventLog) -> FrontArchive {
    let mut front = FrontArchive::new();
    for r in log.individuals() {
        front.insert(&r.objectives);
    }
    front
}

/// Generations at 25, 50, 75 and 100 % of `generations` (rounded up, at least 1).
pub fn checkpoint_generations(generations: u64) -> [u64; 4] {
    [1u64, 2, 3, 4].map(|q| ((q * generations).div_ceil(4)).max(1))
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Objective-sum comparison of migrants and offspring in one generation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OriginSummary {
    pub generation: u64,
    pub migrants: usize,
    pub offspring: usize,
    pub migrant_median: Option<f64>,
    pub offspring_median: Option<f64>,
}

impl OriginSummary {
    /// Migrants at least as good as offspring by median normalized sum.
    /// Generations without migrants do not count as wins.
    pub fn migrants_not_worse(&self) -> bool {
        matches!((self.migrant_median, self.offspring_median), (Some(m), Some(o)) if m <= o)
    }
}

/// For `generation`, normalizes the migrant and offspring records of each
/// layer together (per-objective min-max), then takes the median objective
/// sum of each origin across layers.
pub fn origin_summary(log: &EventLog, generation: u64) -> OriginSummary {
    let mut by_layer: BTreeMap<usize, Vec<(Origin, &[f64])>> = BTreeMap::new();
    for r in log.individuals() {
        if r.generation == generation && matches!(r.origin, Origin::Migrant | Origin::Offspring) {
            by_layer.entry(r.layer).or_default().push((r.origin, &r.objectives));
        }
    }
    let mut migrant = Vec::new();
    let mut offspring = Vec::new();
    for records in by_layer.values() {
        let points: Vec<&[f64]> = records.iter().map(|(_, p)| *p).collect();
        for ((origin, _), s) in records.iter().zip(normalized_objective_sums(&points)) {
            match origin {
                Origin::Migrant => migrant.push(s),
                _ => offspring.push(s),
            }
        }
    }
    OriginSummary {
        generation,
        migrants: migrant.len(),
        offspring: offspring.len(),
        migrant_median: median(&migrant),
        offspring_median: median(&offspring),
    }
}

/// Counts of logged records per origin for one generation.
pub fn origin_counts(log: &EventLog, generation: u64) -> BTreeMap<Origin, usize> {
    let mut counts = BTreeMap::new();
    for r in log.individuals().filter(|r| r.generation == generation) {
        *counts.entry(r.origin).or_insert(0) += 1;
    }
    counts
}

/// Mann-Whitney U test of `a` against `b` (normal approximation with tie
/// and continuity corrections).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of `a`: pairs `(x in a, y in b)` with `x > y`, ties counting 1/2.
    pub u: f64,
    pub z: f64,
    /// One-sided p-value for "`a` tends to be smaller than `b`".
    pub p_less: f64,
}

pub fn mann_whitney(a: &[f64], b: &[f64]) -> MannWhitney {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut all: Vec<(f64, bool)> = a
        .iter()
        .map(|&x| (x, true))
        .chain(b.iter().map(|&y| (y, false)))
        .collect();
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let n = all.len();
    let mut rank_sum_a = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_a += midrank * all[i..=j].iter().filter(|e| e.1).count() as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let u = rank_sum_a - na * (na + 1.0) / 2.0;
    let mean = na * nb / 2.0;
    let nf = n as f64;
    let var = if n > 1 {
        na * nb / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)))
    } else {
        0.0
    };
    let (z, p_less) = if var > 0.0 {
        let z = (u - mean + 0.5) / var.sqrt();
        let normal = Normal::standard();
        (z, normal.cdf(z))
    } else {
        (0.0, 0.5)
    };
    MannWhitney { u, z, p_less }
}
