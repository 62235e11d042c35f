use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FullArchitecture, ObjectiveVector};
use crate::error::Result;
use crate::genome::{CellShape, OpVocabulary, EDGES_PER_NODE};

/// Parameters of the synthetic landscape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandscapeParams {
    pub seed: u64,
    /// Weight of the adjacent-layer interaction term, in `[0, 1]`.
    pub interaction_weight: f64,
    /// Per-layer random-walk step of the edge scores. Small values make
    /// neighbouring layers prefer similar cells.
    pub layer_drift: f64,
    /// Share of each edge score tied to op cost (expensive ops score better).
    pub cost_bias: f64,
}

impl Default for LandscapeParams {
    fn default() -> Self {
        Self {
            seed: 0,
            interaction_weight: 0.3,
            layer_drift: 0.15,
            cost_bias: 0.4,
        }
    }
}

/// Seeded, decomposable error landscape with an adjacent-layer interaction.
///
/// Every (layer, node, source, op) edge has a score in `[0, 1]`. The error is
///
/// ```text
/// (1 - w) * mean_l  mean_{edges of cell l} score
///   +  w  * mean_l (1 - shared_edges(cell l, cell l+1) / edges_per_cell)
/// ```
///
/// and the size proxy is the summed op cost of all active edges.
#[derive(Clone, Debug)]
pub struct SyntheticLandscape {
    shape: CellShape,
    layers: usize,
    vocab: OpVocabulary,
    params: LandscapeParams,
    /// `scores[layer][bit]`
    scores: Vec<Vec<f64>>,
}

impl SyntheticLandscape {
    pub fn new(shape: CellShape, layers: usize, vocab: OpVocabulary, params: LandscapeParams) -> Self {
        let len = shape.genome_length();
        let max_cost = vocab.max_cost();
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        rng.set_stream(0x6c61_6e64);
        let mut walk: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
        let mut scores = Vec::with_capacity(layers);
        for layer in 0..layers {
            if layer > 0 {
                for w in walk.iter_mut() {
                    *w = (*w + params.layer_drift * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0);
                }
            }
            scores.push(
                (0..len)
                    .map(|bit| {
                        let (_, _, op) = shape.locate_bit(bit);
                        let cheapness = if max_cost > 0.0 {
                            1.0 - vocab.cost(op) / max_cost
                        } else {
                            0.5
                        };
                        params.cost_bias * cheapness + (1.0 - params.cost_bias) * walk[bit]
                    })
                    .collect(),
            );
        }
        Self {
            shape,
            layers,
            vocab,
            params,
            scores,
        }
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn vocab(&self) -> &OpVocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &LandscapeParams {
        &self.params
    }

    pub fn edge_score(&self, layer: usize, bit: usize) -> f64 {
        self.scores[layer][bit]
    }

    pub fn evaluate(&self, arch: &FullArchitecture) -> Result<ObjectiveVector> {
        let genomes = arch.genomes();
        if genomes.len() != self.layers {
            return Err(crate::error::Error::LengthMismatch {
                expected: self.layers,
                actual: genomes.len(),
            });
        }
        if arch.shape() != self.shape {
            return Err(crate::error::Error::InvalidShape(format!(
                "landscape expects {:?}, architecture has {:?}",
                self.shape,
                arch.shape()
            )));
        }
        let edges = (self.shape.num_intermediate_nodes * EDGES_PER_NODE) as f64;
        let per_layer: f64 = genomes
            .iter()
            .zip(&self.scores)
            .map(|(g, s)| {
                g.bits()
                    .iter()
                    .zip(s)
                    .filter(|(&b, _)| b == 1)
                    .map(|(_, &v)| v)
                    .sum::<f64>()
                    / edges
            })
            .sum::<f64>()
            / self.layers as f64;
        let error = if self.layers > 1 {
            let interaction: f64 = genomes
                .windows(2)
                .map(|pair| {
                    let shared = pair[0]
                        .bits()
                        .iter()
                        .zip(pair[1].bits())
                        .filter(|(&a, &b)| a == 1 && b == 1)
                        .count() as f64;
                    1.0 - shared / edges
                })
                .sum::<f64>()
                / (self.layers - 1) as f64;
            let w = self.params.interaction_weight;
            (1.0 - w) * per_layer + w * interaction
        } else {
            per_layer
        };
        let size: f64 = arch
            .cells()
            .iter()
            .flat_map(|c| c.edges())
            .map(|(_, e)| self.vocab.cost(e.op))
            .sum();
        ObjectiveVector::new(vec![error.clamp(0.0, 1.0), size])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{compose, Backend, Evaluator};
    use crate::genome::{enumerate_valid, random_genome};
    use std::time::Instant;

    #[test]
    fn evaluation_is_pure() {
        let shape = CellShape::new(2, 4).unwrap();
        let land = SyntheticLandscape::new(shape, 4, OpVocabulary::generic(4), LandscapeParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arch = compose(&(0..4).map(|_| random_genome(shape, &mut rng)).collect::<Vec<_>>(), 4).unwrap();
        let a = land.evaluate(&arch).unwrap();
        let b = land.evaluate(&arch).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.error()));
    }

    #[test]
    fn same_seed_same_scores() {
        let shape = CellShape::new(2, 4).unwrap();
        let p = LandscapeParams { seed: 42, ..Default::default() };
        let a = SyntheticLandscape::new(shape, 3, OpVocabulary::generic(4), p.clone());
        let b = SyntheticLandscape::new(shape, 3, OpVocabulary::generic(4), p);
        assert_eq!(a.scores, b.scores);
    }

    #[test]
    fn identical_neighbours_pay_no_interaction() {
        let shape = CellShape::new(1, 2).unwrap();
        let p = LandscapeParams { interaction_weight: 1.0, ..Default::default() };
        let land = SyntheticLandscape::new(shape, 3, OpVocabulary::generic(2), p);
        let g = enumerate_valid(shape)[0].clone();
        let arch = compose(&[g.clone(), g.clone(), g], 3).unwrap();
        assert_eq!(land.evaluate(&arch).unwrap().error(), 0.0);
    }

    #[test]
    fn size_is_op_cost_sum() {
        let shape = CellShape::new(1, 2).unwrap();
        let land = SyntheticLandscape::new(shape, 2, OpVocabulary::generic(2), LandscapeParams::default());
        // both edges op1 (cost 1) in both layers
        let g = crate::genome::Genome::from_bits(shape, vec![0, 1, 0, 1]).unwrap();
        let arch = compose(&[g.clone(), g], 2).unwrap();
        assert_eq!(land.evaluate(&arch).unwrap().size(), 4.0);
    }

    #[test]
    fn oracle_shape_enumerates_quickly() {
        let shape = CellShape::new(1, 2).unwrap();
        let backend = Backend::Synthetic(SyntheticLandscape::new(
            shape,
            3,
            OpVocabulary::generic(2),
            LandscapeParams::default(),
        ));
        let cells = enumerate_valid(shape);
        let start = Instant::now();
        let mut count = 0;
        for a in &cells {
            for b in &cells {
                for c in &cells {
                    let arch = compose(&[a.clone(), b.clone(), c.clone()], 3).unwrap();
                    backend.evaluate(&arch, None).unwrap();
                    count += 1;
                }
            }
        }
        assert_eq!(count, 64);
        assert!(start.elapsed().as_secs_f64() < 1.0);
    }
}
