//! Architecture composition and objective evaluation.
//!
//! One genome per layer is decoded and stacked into a [`FullArchitecture`].
//! Architectures are scored by an [`Evaluator`]: a seeded synthetic
//! landscape, a tabular benchmark, or a surrogate supernet that inflates a
//! base backend's error according to how trained the shared weights are.

mod landscape;
mod supernet;
mod tabular;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{bits_to_hex, decode, hex_to_bits, CellDag, CellShape, Genome};

pub use landscape::{LandscapeParams, SyntheticLandscape};
pub use supernet::{
    sample_batch_plan, sample_training_batch, BatchPlan, SupernetParams, SurrogateSupernetState,
    TrainingBatch,
};
pub use tabular::{TabularBenchmark, TABULAR_FORMAT_VERSION};

/// Index of the error proxy inside an [`ObjectiveVector`].
pub const ERROR: usize = 0;
/// Index of the size proxy inside an [`ObjectiveVector`].
pub const SIZE: usize = 1;

/// Minimization objectives: error proxy in `[0, 1]` followed by nonnegative
/// cost-like objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidObjectives(format!(
                "need at least 2 objectives, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidObjectives(format!("non-finite value {v}")));
        }
        if !(0.0..=1.0).contains(&values[ERROR]) {
            return Err(Error::InvalidObjectives(format!(
                "error proxy {} outside [0, 1]",
                values[ERROR]
            )));
        }
        if let Some(v) = values[1..].iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidObjectives(format!("negative objective {v}")));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn error(&self) -> f64 {
        self.0[ERROR]
    }

    pub fn size(&self) -> f64 {
        self.0[SIZE]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

/// A complete network: one decoded cell per layer, stacked in layer order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FullArchitecture {
    genomes: Vec<Genome>,
    cells: Vec<CellDag>,
}

impl FullArchitecture {
    pub fn cells(&self) -> &[CellDag] {
        &self.cells
    }

    pub fn genomes(&self) -> &[Genome] {
        &self.genomes
    }

    pub fn layers(&self) -> usize {
        self.cells.len()
    }

    pub fn shape(&self) -> CellShape {
        self.cells[0].shape
    }

    /// Canonical key: hex of the concatenated layer bit strings.
    pub fn key(&self) -> String {
        architecture_key(&self.genomes)
    }

    /// Inverse of [`key`](Self::key).
    pub fn from_key(shape: CellShape, layers: usize, key: &str) -> Result<Self> {
        let len = shape.genome_length();
        let bits = hex_to_bits(key, len * layers)?;
        let picks = bits
            .chunks(len)
            .map(|chunk| Genome::from_bits(shape, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        compose(&picks, layers)
    }
}

pub fn architecture_key(genomes: &[Genome]) -> String {
    let bits: Vec<u8> = genomes.iter().flat_map(|g| g.bits().iter().copied()).collect();
    bits_to_hex(&bits)
}

/// Stacks `picks[l]` as layer `l`. Identical picks are kept as repeated cells.
pub fn compose(picks: &[Genome], layers: usize) -> Result<FullArchitecture> {
    if picks.len() != layers {
        return Err(Error::LengthMismatch {
            expected: layers,
            actual: picks.len(),
        });
    }
    if let Some(first) = picks.first() {
        if let Some(bad) = picks.iter().find(|g| g.shape() != first.shape()) {
            return Err(Error::InvalidShape(format!(
                "layer shapes differ: {:?} vs {:?}",
                first.shape(),
                bad.shape()
            )));
        }
    }
    let cells = picks.iter().map(decode).collect::<Result<Vec<_>>>()?;
    Ok(FullArchitecture {
        genomes: picks.to_vec(),
        cells,
    })
}

/// Scores architectures. Implementations must be pure.
pub trait Evaluator: Send + Sync {
    fn evaluate(
        &self,
        arch: &FullArchitecture,
        state: Option<&SurrogateSupernetState>,
    ) -> Result<ObjectiveVector>;

    fn num_objectives(&self) -> usize {
        2
    }
}

/// The shipped evaluator backends.
#[derive(Clone, Debug)]
pub enum Backend {
    Synthetic(SyntheticLandscape),
    Tabular(TabularBenchmark),
    /// Base backend whose error is inflated by `(1 + inflation * (1 - m))`,
    /// `m` being the mean normalized maturity of the architecture's edges.
    Surrogate { base: Box<Backend>, inflation: f64 },
}

impl Evaluator for Backend {
    fn evaluate(
        &self,
        arch: &FullArchitecture,
        state: Option<&SurrogateSupernetState>,
    ) -> Result<ObjectiveVector> {
        match self {
            Backend::Synthetic(landscape) => landscape.evaluate(arch),
            Backend::Tabular(table) => table.lookup(arch),
            Backend::Surrogate { base, inflation } => {
                let state = state.ok_or(Error::AbsentState)?;
                let base_vector = base.evaluate(arch, Some(state))?;
                let maturity = state.mean_normalized_maturity(arch);
                let mut values = base_vector.values().to_vec();
                values[ERROR] = (values[ERROR] * (1.0 + inflation * (1.0 - maturity))).min(1.0);
                ObjectiveVector::new(values)
            }
        }
    }

    fn num_objectives(&self) -> usize {
        match self {
            Backend::Synthetic(_) => 2,
            Backend::Tabular(table) => table.num_objectives(),
            Backend::Surrogate { base, .. } => base.num_objectives(),
        }
    }
}
