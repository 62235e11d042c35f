use std::fmt;

use rand::Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    compose, sample_batch_plan, sample_training_batch, FullArchitecture, ObjectiveVector, TrainingBatch,
};
use crate::genome::{self, random_genome, CellShape, Genome};
use crate::migration::MigrationArchive;

/// How an individual entered a population, or which part of the selection
/// pool a log record describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Initial,
    Offspring,
    Migrant,
    ParentCarryover,
}

impl Origin {
    pub fn as_str(&self) -> &'static str {
        match self {
            Origin::Initial => "initial",
            Origin::Offspring => "offspring",
            Origin::Migrant => "migrant",
            Origin::ParentCarryover => "parent-carryover",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Objectives of the most recent evaluation and the architecture they came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    pub architecture: String,
    pub generation: u64,
}

/// Genomes the genetic operators can work on node by node.
pub trait Chromosome:
    Clone + PartialEq + fmt::Debug + Send + Sync + Serialize + DeserializeOwned
{
    /// Per-layer cell genomes carried by this chromosome.
    fn cells(&self) -> &[Genome];

    fn node_count(&self) -> usize;

    fn swap_node(&mut self, other: &mut Self, node: usize);

    fn randomize_node<R: Rng + ?Sized>(&mut self, node: usize, rng: &mut R);

    fn repaired<R: Rng + ?Sized>(&self, rng: &mut R) -> Self;

    fn to_hex(&self) -> String;

    /// One Bernoulli-sampled surrogate training batch over `populations`.
    fn training_batch<R: Rng + ?Sized>(
        populations: &[Vec<&Self>],
        layers: usize,
        rng: &mut R,
    ) -> Result<TrainingBatch>;

    /// Full architecture for this chromosome. Single-cell chromosomes fill
    /// the remaining layers from `context`.
    fn architecture(&self, context: &[Genome], layer: usize, layers: usize) -> Result<FullArchitecture> {
        let cells = self.cells();
        if cells.len() == layers {
            compose(cells, layers)
        } else {
            if context.len() != layers || cells.len() != 1 {
                return Err(Error::LengthMismatch {
                    expected: layers,
                    actual: context.len(),
                });
            }
            let mut picks = context.to_vec();
            picks[layer] = cells[0].clone();
            compose(&picks, layers)
        }
    }
}

impl Chromosome for Genome {
    fn cells(&self) -> &[Genome] {
        std::slice::from_ref(self)
    }

    fn node_count(&self) -> usize {
        self.shape().num_intermediate_nodes
    }

    fn swap_node(&mut self, other: &mut Self, node: usize) {
        Genome::swap_node(self, other, node)
    }

    fn randomize_node<R: Rng + ?Sized>(&mut self, node: usize, rng: &mut R) {
        Genome::randomize_node(self, node, rng)
    }

    fn repaired<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        genome::repair(self, rng)
    }

    fn to_hex(&self) -> String {
        Genome::to_hex(self)
    }

    fn training_batch<R: Rng + ?Sized>(
        populations: &[Vec<&Self>],
        layers: usize,
        rng: &mut R,
    ) -> Result<TrainingBatch> {
        if populations.len() != layers {
            return Err(Error::LengthMismatch {
                expected: layers,
                actual: populations.len(),
            });
        }
        sample_training_batch(populations, rng)
    }
}

/// Concatenation of one genome per layer, used by the single-population
/// global baseline. Node `i` is node `i % B` of layer `i / B`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct GlobalGenome {
    layers: Vec<Genome>,
}

impl GlobalGenome {
    pub fn new(layers: Vec<Genome>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("a global genome needs at least one layer".into()))?;
        if layers.iter().any(|g| g.shape() != first.shape()) {
            return Err(Error::InvalidShape("global genome layers differ in shape".into()));
        }
        Ok(Self { layers })
    }

    pub fn random<R: Rng + ?Sized>(shape: CellShape, layers: usize, rng: &mut R) -> Self {
        Self {
            layers: (0..layers).map(|_| random_genome(shape, rng)).collect(),
        }
    }

    pub fn layers(&self) -> &[Genome] {
        &self.layers
    }

    /// Length of the concatenated bit vector.
    pub fn len(&self) -> usize {
        self.layers.iter().map(Genome::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn split(&self, node: usize) -> (usize, usize) {
        let b = self.layers[0].shape().num_intermediate_nodes;
        (node / b, node % b)
    }
}

impl Chromosome for GlobalGenome {
    fn cells(&self) -> &[Genome] {
        &self.layers
    }

    fn node_count(&self) -> usize {
        self.layers.iter().map(|g| g.shape().num_intermediate_nodes).sum()
    }

    fn swap_node(&mut self, other: &mut Self, node: usize) {
        let (layer, local) = self.split(node);
        self.layers[layer].swap_node(&mut other.layers[layer], local);
    }

    fn randomize_node<R: Rng + ?Sized>(&mut self, node: usize, rng: &mut R) {
        let (layer, local) = self.split(node);
        self.layers[layer].randomize_node(local, rng);
    }

    fn repaired<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        Self {
            layers: self.layers.iter().map(|g| genome::repair(g, rng)).collect(),
        }
    }

    fn to_hex(&self) -> String {
        crate::evaluation::architecture_key(&self.layers)
    }

    /// Every member is already a full architecture, so the batch is the
    /// Bernoulli-included members of the single population.
    fn training_batch<R: Rng + ?Sized>(
        populations: &[Vec<&Self>],
        layers: usize,
        rng: &mut R,
    ) -> Result<TrainingBatch> {
        let [members] = populations else {
            return Err(Error::LengthMismatch {
                expected: 1,
                actual: populations.len(),
            });
        };
        if members.is_empty() {
            return Err(Error::Config("population 0 is empty".into()));
        }
        let plan = sample_batch_plan(&[members.len()], rng);
        let architectures = plan
            .slots
            .iter()
            .map(|slot| compose(members[slot[0]].cells(), layers))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrainingBatch::from_plan(&plan, members.len(), architectures))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Individual<G = Genome> {
    pub id: u64,
    pub genome: G,
    origin: Origin,
    pub birth_generation: u64,
    pub evaluation: Option<Evaluation>,
}

impl<G> Individual<G> {
    pub fn new(id: u64, genome: G, origin: Origin, birth_generation: u64) -> Self {
        Self {
            id,
            genome,
            origin,
            birth_generation,
            evaluation: None,
        }
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    pub fn objectives(&self) -> Result<&ObjectiveVector> {
        self.evaluation
            .as_ref()
            .map(|e| &e.objectives)
            .ok_or(Error::Unevaluated(self.id))
    }

    pub fn is_evaluated(&self) -> bool {
        self.evaluation.is_some()
    }

    /// Copy under a new identity and origin, without the evaluation.
    pub fn reborn(&self, id: u64, origin: Origin, birth_generation: u64) -> Self
    where
        G: Clone,
    {
        Self::new(id, self.genome.clone(), origin, birth_generation)
    }
}

/// One layer's population and its migration archive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population<G = Genome> {
    pub layer_index: usize,
    pub members: Vec<Individual<G>>,
    pub archive: MigrationArchive<G>,
}

impl<G> Population<G> {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Objective vectors of all members, failing on the first unevaluated one.
    pub fn objectives(&self) -> Result<Vec<&[f64]>> {
        objective_slices(&self.members)
    }
}

pub fn objective_slices<G>(members: &[Individual<G>]) -> Result<Vec<&[f64]>> {
    members
        .iter()
        .map(|m| m.objectives().map(ObjectiveVector::values))
        .collect()
}
