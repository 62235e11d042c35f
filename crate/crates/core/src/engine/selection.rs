//! Pareto machinery: fast nondominated sorting, crowding distance and
//! environmental selection.

use std::cmp::Ordering;

use super::individual::{objective_slices, Individual};
use crate::error::{Error, Result};

/// `a` dominates `b` under minimization.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast nondominated sort. Each front lists point indices in ascending order.
pub fn nondominated_fronts(points: &[&[f64]]) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut dominated_by: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut domination_count = vec![0usize; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates(points[i], points[j]) {
                dominated_by[i].push(j);
                domination_count[j] += 1;
            } else if dominates(points[j], points[i]) {
                dominated_by[j].push(i);
                domination_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| domination_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                domination_count[j] -= 1;
                if domination_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(current);
        current = next;
    }
    fronts
}

/// Crowding distance of each member of `front` (aligned with `front`).
/// Boundary points of every objective get `f64::INFINITY`.
pub fn crowding_distances(points: &[&[f64]], front: &[usize]) -> Vec<f64> {
    let n = front.len();
    let mut distance = vec![0.0; n];
    if n == 0 {
        return distance;
    }
    let objectives = points[front[0]].len();
    let mut order: Vec<usize> = (0..n).collect();
    for m in 0..objectives {
        order.sort_by(|&a, &b| {
            points[front[a]][m]
                .total_cmp(&points[front[b]][m])
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]][m];
        let hi = points[front[order[n - 1]]][m];
        distance[order[0]] = f64::INFINITY;
        distance[order[n - 1]] = f64::INFINITY;
        if hi > lo {
            for w in 1..n.saturating_sub(1) {
                let prev = points[front[order[w - 1]]][m];
                let next = points[front[order[w + 1]]][m];
                distance[order[w]] += (next - prev) / (hi - lo);
            }
        }
    }
    distance
}

/// Pareto rank (0 = first front) and crowding distance per point.
#[derive(Clone, Debug, PartialEq)]
pub struct ParetoRanking {
    pub rank: Vec<usize>,
    pub crowding: Vec<f64>,
}

impl ParetoRanking {
    pub fn new(points: &[&[f64]]) -> Self {
        let mut rank = vec![0; points.len()];
        let mut crowding = vec![0.0; points.len()];
        for (r, front) in nondominated_fronts(points).iter().enumerate() {
            for (&i, d) in front.iter().zip(crowding_distances(points, front)) {
                rank[i] = r;
                crowding[i] = d;
            }
        }
        Self { rank, crowding }
    }

    /// Crowded comparison: lower rank first, then larger crowding distance.
    pub fn compare(&self, a: usize, b: usize) -> Ordering {
        self.rank[a]
            .cmp(&self.rank[b])
            .then(self.crowding[b].total_cmp(&self.crowding[a]))
    }
}

/// Indices of the `keep` survivors, in ascending pool order.
///
/// Fronts are admitted whole while they fit; the front that overflows is
/// truncated by descending crowding distance, then older birth generation,
/// then lower pool index.
pub fn select_indices(points: &[&[f64]], birth: &[u64], keep: usize) -> Vec<usize> {
    let mut chosen = Vec::with_capacity(keep);
    for front in nondominated_fronts(points) {
        if chosen.len() == keep {
            break;
        }
        if chosen.len() + front.len() <= keep {
            chosen.extend_from_slice(&front);
            continue;
        }
        let distance = crowding_distances(points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            distance[b]
                .total_cmp(&distance[a])
                .then(birth[front[a]].cmp(&birth[front[b]]))
                .then(front[a].cmp(&front[b]))
        });
        let room = keep - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|w| front[w]));
    }
    chosen.sort_unstable();
    chosen
}

/// Environmental selection over an evaluated pool; returns survivor indices.
pub fn environmental_selection_indices<G>(pool: &[Individual<G>], keep: usize) -> Result<Vec<usize>> {
    let points = objective_slices(pool)?;
    if keep > pool.len() {
        return Err(Error::Config(format!(
            "cannot keep {keep} individuals from a pool of {}",
            pool.len()
        )));
    }
    let birth: Vec<u64> = pool.iter().map(|m| m.birth_generation).collect();
    Ok(select_indices(&points, &birth, keep))
}

/// Environmental selection over an evaluated pool.
pub fn environmental_selection<G: Clone>(pool: &[Individual<G>], keep: usize) -> Result<Vec<Individual<G>>> {
    Ok(environmental_selection_indices(pool, keep)?
        .into_iter()
        .map(|i| pool[i].clone())
        .collect())
}

/// Consumes the pool, keeping the survivors in pool order.
pub fn environmental_selection_owned<G>(pool: Vec<Individual<G>>, keep: usize) -> Result<Vec<Individual<G>>> {
    let chosen = environmental_selection_indices(&pool, keep)?;
    let mut flags = vec![false; pool.len()];
    for i in chosen {
        flags[i] = true;
    }
    Ok(pool
        .into_iter()
        .zip(flags)
        .filter_map(|(m, keep)| keep.then_some(m))
        .collect())
}
