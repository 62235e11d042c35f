//! Search configuration, read from TOML.
//!
//! Every key is optional; missing keys take the defaults below. Unknown keys
//! are rejected.
//!
//! ```toml
//! searcher = "mpae"          # mpae | coevolution | global
//! seed = 0
//! layers = 20
//! population_size = 64
//! generations = 45
//! # warm_up_steps = 50       # default: a ninth of generations * steps_per_arch_update
//! crossover_rate = 0.25
//! mutation_rate = 0.25
//! archive_size = 8
//! steps_per_arch_update = 10
//! # max_evaluations = 100000
//!
//! [cell]
//! nodes = 4
//! ops = 8
//!
//! [migration]
//! base_count = 4
//! depth = 4
//! max_total = 16
//!
//! [supernet]
//! eta = 0.05
//! max_maturity = 1.0
//!
//! [backend]
//! kind = "synthetic"         # synthetic | tabular | surrogate
//! # table = "table.txt"      # tabular, or surrogate over tabular
//! # surrogate_base = "synthetic"
//! # inflation = 0.5
//! [backend.landscape]
//! seed = 0
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::operators::GeneticRates;
use crate::error::{Error, Result};
use crate::evaluation::{Backend, LandscapeParams, SupernetParams, SyntheticLandscape, TabularBenchmark};
use crate::genome::{CellShape, OpVocabulary};
use crate::migration::MigrationPolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearcherKind {
    Mpae,
    Coevolution,
    Global,
}

impl SearcherKind {
    pub const ALL: [SearcherKind; 3] = [SearcherKind::Mpae, SearcherKind::Coevolution, SearcherKind::Global];

    pub fn as_str(&self) -> &'static str {
        match self {
            SearcherKind::Mpae => "mpae",
            SearcherKind::Coevolution => "coevolution",
            SearcherKind::Global => "global",
        }
    }
}

impl fmt::Display for SearcherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    pub nodes: usize,
    pub ops: usize,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self { nodes: 4, ops: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Synthetic,
    Tabular,
    Surrogate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub landscape: LandscapeParams,
    /// Tabular benchmark file, relative paths resolved against the config file.
    pub table: Option<PathBuf>,
    /// Backend wrapped by the surrogate (synthetic or tabular).
    pub surrogate_base: BackendKind,
    /// Error inflation of a fully untrained surrogate.
    pub inflation: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::Synthetic,
            landscape: LandscapeParams::default(),
            table: None,
            surrogate_base: BackendKind::Synthetic,
            inflation: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub searcher: SearcherKind,
    pub seed: u64,
    pub layers: usize,
    pub population_size: usize,
    pub generations: u64,
    pub warm_up_steps: Option<u64>,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub archive_size: usize,
    pub steps_per_arch_update: u64,
    /// Stop before any generation that would push the evaluation count past this.
    pub max_evaluations: Option<u64>,
    pub cell: CellConfig,
    pub migration: MigrationPolicy,
    pub supernet: SupernetParams,
    pub backend: BackendConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            searcher: SearcherKind::Mpae,
            seed: 0,
            layers: 20,
            population_size: 64,
            generations: 45,
            warm_up_steps: None,
            crossover_rate: 0.25,
            mutation_rate: 0.25,
            archive_size: 8,
            steps_per_arch_update: 10,
            max_evaluations: None,
            cell: CellConfig::default(),
            migration: MigrationPolicy::default(),
            supernet: SupernetParams::default(),
            backend: BackendConfig::default(),
        }
    }
}

impl SearchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file. A relative `backend.table` is
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        if let (Some(table), Some(dir)) = (config.backend.table.as_mut(), path.parent()) {
            if table.is_relative() {
                *table = dir.join(&*table);
            }
        }
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("layers", self.layers as u64),
            ("population_size", self.population_size as u64),
            ("archive_size", self.archive_size as u64),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, rate) in [("crossover_rate", self.crossover_rate), ("mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        if self.archive_size > self.population_size {
            return Err(Error::Config(format!(
                "archive_size {} exceeds population_size {}",
                self.archive_size, self.population_size
            )));
        }
        self.shape()?;
        self.migration.validate(self.archive_size, self.population_size)?;
        self.supernet.validate()?;
        if !(self.backend.inflation >= 0.0 && self.backend.inflation.is_finite()) {
            return Err(Error::Config("backend inflation must be nonnegative".into()));
        }
        let lw = &self.backend.landscape;
        for (name, v) in [
            ("interaction_weight", lw.interaction_weight),
            ("layer_drift", lw.layer_drift),
            ("cost_bias", lw.cost_bias),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("landscape {name} must lie in [0, 1], got {v}")));
            }
        }
        if self.backend.surrogate_base == BackendKind::Surrogate {
            return Err(Error::Config("a surrogate cannot wrap another surrogate".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> Result<CellShape> {
        CellShape::new(self.cell.nodes, self.cell.ops).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn vocab(&self) -> OpVocabulary {
        OpVocabulary::for_ops(self.cell.ops)
    }

    pub fn rates(&self) -> GeneticRates {
        GeneticRates {
            crossover: self.crossover_rate,
            mutation: self.mutation_rate,
        }
    }

    /// Warm-up steps: the configured value, else a tenth of all training
    /// steps (warm-up plus evolution), i.e. a ninth of the evolution steps.
    pub fn warm_up_steps(&self) -> u64 {
        self.warm_up_steps.unwrap_or_else(|| {
            let evolution = self.generations * self.steps_per_arch_update;
            (evolution + 4) / 9
        })
    }

    /// Migration policy in effect for `searcher` (coevolution never migrates).
    pub fn effective_migration(&self) -> MigrationPolicy {
        match self.searcher {
            SearcherKind::Coevolution => MigrationPolicy {
                base_count: 0,
                ..self.migration
            },
            _ => self.migration,
        }
    }

    pub fn with_searcher(&self, searcher: SearcherKind) -> Self {
        Self {
            searcher,
            ..self.clone()
        }
    }

    pub fn build_backend(&self) -> Result<Backend> {
        let base = |kind: BackendKind| -> Result<Backend> {
            match kind {
                BackendKind::Synthetic => Ok(Backend::Synthetic(SyntheticLandscape::new(
                    self.shape()?,
                    self.layers,
                    self.vocab(),
                    self.backend.landscape.clone(),
                ))),
                BackendKind::Tabular => {
                    let path = self
                        .backend
                        .table
                        .as_ref()
                        .ok_or_else(|| Error::Config("tabular backend needs backend.table".into()))?;
                    let table = TabularBenchmark::read(path)?;
                    if table.shape() != self.shape()? || table.layers() != self.layers {
                        return Err(Error::Config(format!(
                            "table {} covers {} layers of {:?}, config asks for {} layers of {:?}",
                            path.display(),
                            table.layers(),
                            table.shape(),
                            self.layers,
                            self.shape()?
                        )));
                    }
                    Ok(Backend::Tabular(table))
                }
                BackendKind::Surrogate => Err(Error::Config("a surrogate cannot wrap another surrogate".into())),
            }
        };
        match self.backend.kind {
            BackendKind::Surrogate => Ok(Backend::Surrogate {
                base: Box::new(base(self.backend.surrogate_base)?),
                inflation: self.backend.inflation,
            }),
            kind => base(kind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c = SearchConfig::from_toml_str("").unwrap();
        assert_eq!(c, SearchConfig::default());
        assert_eq!((c.layers, c.population_size), (20, 64));
        assert_eq!((c.crossover_rate, c.mutation_rate), (0.25, 0.25));
        assert_eq!(c.steps_per_arch_update, 10);
    }

    #[test]
    fn default_warm_up_is_a_tenth_of_all_training() {
        let c = SearchConfig::default();
        let evolution = c.generations * c.steps_per_arch_update;
        assert_eq!(evolution, 450);
        assert_eq!(c.warm_up_steps(), 50);
        assert_eq!(c.warm_up_steps() * 10, c.warm_up_steps() + evolution);
    }

    #[test]
    fn round_trips_through_toml() {
        let mut c = SearchConfig::default();
        c.searcher = SearcherKind::Global;
        c.max_evaluations = Some(1000);
        c.backend.table = Some("t.txt".into());
        let back = SearchConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "layers = 0",
            "crossover_rate = 1.5",
            "archive_size = 100",
            "[migration]\ndepth = 9",
            "[migration]\nmax_total = 65",
            "[cell]\nops = 1",
            "[supernet]\neta = 2.0",
            "bogus = 1",
            "searcher = \"random\"",
        ] {
            assert!(
                matches!(SearchConfig::from_toml_str(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn coevolution_never_migrates() {
        let c = SearchConfig::default().with_searcher(SearcherKind::Coevolution);
        assert_eq!(c.effective_migration().base_count, 0);
        assert_eq!(SearchConfig::default().effective_migration().base_count, 4);
    }

    #[test]
    fn tabular_without_table_is_a_config_error() {
        let c = SearchConfig::from_toml_str("[backend]\nkind = \"tabular\"").unwrap();
        assert!(matches!(c.build_backend(), Err(Error::Config(_))));
    }
}
