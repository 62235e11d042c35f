use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{compose, FullArchitecture};
use crate::error::{Error, Result};
use crate::genome::{CellShape, Genome};

/// Saturating maturity dynamics: each trained entry moves by
/// `eta * (1 - m / max_maturity)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupernetParams {
    pub eta: f64,
    pub max_maturity: f64,
}

impl Default for SupernetParams {
    fn default() -> Self {
        Self {
            eta: 0.05,
            max_maturity: 1.0,
        }
    }
}

impl SupernetParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.max_maturity > 0.0 && self.max_maturity.is_finite()) {
            return Err(Error::Config("supernet max_maturity must be positive".into()));
        }
        if !(self.eta >= 0.0 && self.eta <= self.max_maturity) {
            return Err(Error::Config(
                "supernet eta must lie in [0, max_maturity]".into(),
            ));
        }
        Ok(())
    }
}

/// Stand-in for shared supernet weights: one maturity value per
/// (layer, source block, op), i.e. per genome bit of each layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSupernetState {
    params: SupernetParams,
    maturity: Vec<Vec<f64>>,
    trained_steps: u64,
}

impl SurrogateSupernetState {
    pub fn new(layers: usize, shape: CellShape, params: SupernetParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            maturity: vec![vec![0.0; shape.genome_length()]; layers],
            trained_steps: 0,
        })
    }

    pub fn params(&self) -> SupernetParams {
        self.params
    }

    pub fn trained_steps(&self) -> u64 {
        self.trained_steps
    }

    pub fn maturity(&self, layer: usize, bit: usize) -> f64 {
        self.maturity[layer][bit]
    }

    pub fn layers(&self) -> usize {
        self.maturity.len()
    }

    /// Mean maturity over every entry.
    pub fn mean_maturity(&self) -> f64 {
        let n: usize = self.maturity.iter().map(Vec::len).sum();
        if n == 0 {
            return 0.0;
        }
        self.maturity.iter().flatten().sum::<f64>() / n as f64
    }

    /// Sets every entry to `value` (clamped to `max_maturity`).
    pub fn fill(&mut self, value: f64) {
        let v = value.clamp(0.0, self.params.max_maturity);
        for row in &mut self.maturity {
            row.fill(v);
        }
    }

    /// Mean of `m / max_maturity` over the edges the architecture uses.
    pub fn mean_normalized_maturity(&self, arch: &FullArchitecture) -> f64 {
        let mut total = 0.0;
        let mut count = 0usize;
        for (layer, genome) in arch.genomes().iter().enumerate() {
            for (bit, &b) in genome.bits().iter().enumerate() {
                if b == 1 {
                    total += self.maturity[layer][bit];
                    count += 1;
                }
            }
        }
        if count == 0 {
            return 0.0;
        }
        total / count as f64 / self.params.max_maturity
    }

    /// One surrogate training step on `batch`. Entries used by several batch
    /// members are still advanced once.
    pub fn train_step(&mut self, batch: &[FullArchitecture]) {
        let mut touched: Vec<Vec<bool>> = self.maturity.iter().map(|r| vec![false; r.len()]).collect();
        for arch in batch {
            for (layer, genome) in arch.genomes().iter().enumerate() {
                for (bit, &b) in genome.bits().iter().enumerate() {
                    if b == 1 {
                        touched[layer][bit] = true;
                    }
                }
            }
        }
        let SupernetParams { eta, max_maturity } = self.params;
        for (row, flags) in self.maturity.iter_mut().zip(&touched) {
            for (m, &t) in row.iter_mut().zip(flags) {
                if t {
                    *m = (*m + eta * (1.0 - *m / max_maturity)).min(max_maturity);
                }
            }
        }
        self.trained_steps += 1;
    }

    /// Functional form of [`train_step`](Self::train_step).
    pub fn trained(&self, batch: &[FullArchitecture]) -> Self {
        let mut next = self.clone();
        next.train_step(batch);
        next
    }
}

/// Which members were drawn for one training batch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchPlan {
    /// Members of each layer that passed the Bernoulli(0.5) draw.
    pub included: Vec<Vec<usize>>,
    /// `slots[j][l]`: member of layer `l` placed in batch architecture `j`.
    pub slots: Vec<Vec<usize>>,
}

/// Bernoulli(0.5) inclusion per member, positional pairing across layers,
/// short layers padded by uniform resampling from their included members
/// (or from the whole layer when nothing was included).
pub fn sample_batch_plan<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> BatchPlan {
    let included: Vec<Vec<usize>> = layer_sizes
        .iter()
        .map(|&n| (0..n).filter(|_| rng.gen_bool(0.5)).collect())
        .collect();
    let batch = included.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(layer_sizes.len());
    for (inc, &n) in included.iter().zip(layer_sizes) {
        let mut column = inc.clone();
        while column.len() < batch {
            let pick = if inc.is_empty() {
                rng.gen_range(0..n)
            } else {
                inc[rng.gen_range(0..inc.len())]
            };
            column.push(pick);
        }
        columns.push(column);
    }
    let slots = (0..batch)
        .map(|j| columns.iter().map(|c| c[j]).collect())
        .collect();
    BatchPlan { included, slots }
}

/// One sampled training batch and its Bernoulli inclusion counts.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingBatch {
    pub architectures: Vec<FullArchitecture>,
    pub candidates: u64,
    pub included: u64,
}

impl TrainingBatch {
    pub fn from_plan(plan: &BatchPlan, candidates: usize, architectures: Vec<FullArchitecture>) -> Self {
        Self {
            architectures,
            candidates: candidates as u64,
            included: plan.included.iter().map(|v| v.len() as u64).sum(),
        }
    }
}

/// Draws one surrogate training batch from per-layer populations.
pub fn sample_training_batch<R: Rng + ?Sized>(
    populations: &[Vec<&Genome>],
    rng: &mut R,
) -> Result<TrainingBatch> {
    if let Some(layer) = populations.iter().position(Vec::is_empty) {
        return Err(Error::Config(format!("population {layer} is empty")));
    }
    let sizes: Vec<usize> = populations.iter().map(Vec::len).collect();
    let plan = sample_batch_plan(&sizes, rng);
    let architectures = plan
        .slots
        .iter()
        .map(|slot| {
            let picks: Vec<Genome> = slot
                .iter()
                .enumerate()
                .map(|(l, &i)| populations[l][i].clone())
                .collect();
            compose(&picks, populations.len())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainingBatch::from_plan(&plan, sizes.iter().sum(), architectures))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::random_genome;
    use rand::rngs::mock::StepRng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape() -> CellShape {
        CellShape::new(2, 3).unwrap()
    }

    fn populations(layers: usize, n: usize, seed: u64) -> Vec<Vec<Genome>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..layers)
            .map(|_| (0..n).map(|_| random_genome(shape(), &mut rng)).collect())
            .collect()
    }

    fn refs(pops: &[Vec<Genome>]) -> Vec<Vec<&Genome>> {
        pops.iter().map(|p| p.iter().collect()).collect()
    }

    #[test]
    fn all_included_pairs_positionally() {
        let pops = populations(3, 5, 1);
        // gen_bool(0.5) accepts any draw below 2^63
        let mut rng = StepRng::new(0, 0);
        let batch = sample_training_batch(&refs(&pops), &mut rng).unwrap();
        assert_eq!((batch.candidates, batch.included), (15, 15));
        let batch = batch.architectures;
        assert_eq!(batch.len(), 5);
        for (j, arch) in batch.iter().enumerate() {
            for l in 0..3 {
                assert_eq!(arch.genomes()[l], pops[l][j]);
            }
        }
    }

    #[test]
    fn nothing_included_gives_single_uniform_draw() {
        // draws stay at or above 2^63 so every Bernoulli fails
        let mut rng = StepRng::new(1 << 63, 1 << 40);
        let plan = sample_batch_plan(&[4, 4, 4], &mut rng);
        assert!(plan.included.iter().all(Vec::is_empty));
        assert_eq!(plan.slots.len(), 1);
        assert!(plan.slots[0].iter().all(|&i| i < 4));
    }

    #[test]
    fn short_layers_are_padded_from_their_included_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let plan = sample_batch_plan(&[6, 2, 9], &mut rng);
            let batch = plan.slots.len();
            assert_eq!(
                batch,
                plan.included.iter().map(Vec::len).max().unwrap().max(1)
            );
            for (l, inc) in plan.included.iter().enumerate() {
                for (j, slot) in plan.slots.iter().enumerate() {
                    if j < inc.len() {
                        assert_eq!(slot[l], inc[j]);
                    } else if !inc.is_empty() {
                        assert!(inc.contains(&slot[l]));
                    }
                }
            }
        }
    }

    #[test]
    fn fresh_state_one_step() {
        let pops = populations(2, 1, 4);
        let arch = compose(&[pops[0][0].clone(), pops[1][0].clone()], 2).unwrap();
        let params = SupernetParams { eta: 0.1, max_maturity: 1.0 };
        let mut state = SurrogateSupernetState::new(2, shape(), params).unwrap();
        state.train_step(std::slice::from_ref(&arch));
        assert_eq!(state.trained_steps(), 1);
        for (l, g) in arch.genomes().iter().enumerate() {
            for (bit, &b) in g.bits().iter().enumerate() {
                let expected = if b == 1 { 0.1 } else { 0.0 };
                assert_eq!(state.maturity(l, bit), expected);
            }
        }
    }

    #[test]
    fn maturity_saturates_below_max() {
        let pops = populations(2, 8, 5);
        let params = SupernetParams { eta: 0.3, max_maturity: 1.0 };
        let mut state = SurrogateSupernetState::new(2, shape(), params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut previous = state.clone();
        for _ in 0..10_000 {
            let batch = sample_training_batch(&refs(&pops), &mut rng).unwrap();
            state.train_step(&batch.architectures);
            for l in 0..2 {
                for bit in 0..shape().genome_length() {
                    let m = state.maturity(l, bit);
                    assert!(m <= 1.0 && m.is_finite());
                    assert!(m >= previous.maturity(l, bit));
                }
            }
            previous = state.clone();
        }
    }

    #[test]
    fn rejects_eta_above_max() {
        let params = SupernetParams { eta: 2.0, max_maturity: 1.0 };
        assert!(SurrogateSupernetState::new(1, shape(), params).is_err());
    }

    #[test]
    fn inclusion_frequency_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let mut counts = [0u32; 4];
        for _ in 0..trials {
            let plan = sample_batch_plan(&[4], &mut rng);
            for &i in &plan.included[0] {
                counts[i] += 1;
            }
        }
        let sigma = (trials as f64 * 0.25).sqrt();
        for c in counts {
            assert!((c as f64 - trials as f64 * 0.5).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }
}
