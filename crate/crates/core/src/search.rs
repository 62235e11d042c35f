//! Searcher-agnostic driver over the three search strategies.

use serde::{Deserialize, Serialize};

use crate::config::{SearchConfig, SearcherKind};
use crate::engine::individual::{Chromosome, GlobalGenome, Individual, Origin, Population};
use crate::engine::operators::OperatorStats;
use crate::analysis::pareto_front_indices;
use crate::engine::selection::nondominated_fronts;
use crate::engine::{Engine, RunState, SamplingStats};
use crate::error::{Error, Result};
use crate::evaluation::{compose, Evaluator, FullArchitecture};
use crate::genome::Genome;
use crate::log::EventLog;
use crate::par;

/// Run state of either chromosome kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "state", rename_all = "lowercase")]
pub enum SearchState {
    Cells(RunState<Genome>),
    Global(RunState<GlobalGenome>),
}

macro_rules! dispatch {
    ($state:expr, $s:ident => $body:expr) => {
        match $state {
            SearchState::Cells($s) => $body,
            SearchState::Global($s) => $body,
        }
    };
}

impl SearchState {
    pub fn searcher(&self) -> SearcherKind {
        dispatch!(self, s => s.searcher)
    }

    pub fn generation(&self) -> u64 {
        dispatch!(self, s => s.generation)
    }

    pub fn evaluations(&self) -> u64 {
        dispatch!(self, s => s.evaluations)
    }

    pub fn log_len(&self) -> usize {
        dispatch!(self, s => s.log_len)
    }

    pub fn hash(&self) -> String {
        dispatch!(self, s => s.hash())
    }
}

/// A final population member with the architecture it was last scored as.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalMember {
    pub layer: usize,
    pub id: u64,
    pub origin: Origin,
    pub genome: String,
    pub architecture: String,
    pub objectives: Vec<f64>,
}

fn final_members<G: Chromosome>(populations: &[Population<G>]) -> Result<Vec<FinalMember>> {
    let mut out = Vec::new();
    for p in populations {
        for m in &p.members {
            out.push(final_member(p.layer_index, m)?);
        }
    }
    Ok(out)
}

fn final_member<G: Chromosome>(layer: usize, m: &Individual<G>) -> Result<FinalMember> {
    let eval = m.evaluation.as_ref().ok_or(Error::Unevaluated(m.id))?;
    Ok(FinalMember {
        layer,
        id: m.id,
        origin: m.origin(),
        genome: m.genome.to_hex(),
        architecture: eval.architecture.clone(),
        objectives: eval.objectives.values().to_vec(),
    })
}

/// A full architecture of the final front.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontArchitecture {
    pub architecture: String,
    /// Hex genome of every layer's cell.
    pub cells: Vec<String>,
    pub objectives: Vec<f64>,
}

/// Distinct first-front cells of one population, ordered by objectives.
fn sorted_first_front(population: &Population<Genome>) -> Result<Vec<&Individual>> {
    let points = population.objectives()?;
    let mut front: Vec<&Individual> = nondominated_fronts(&points)[0]
        .iter()
        .map(|&i| &population.members[i])
        .collect();
    front.sort_by(|a, b| {
        let (pa, pb) = (a.evaluation.as_ref(), b.evaluation.as_ref());
        let key = |e: Option<&crate::engine::individual::Evaluation>| e.map(|e| e.objectives.values().to_vec());
        key(pa)
            .partial_cmp(&key(pb))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.genome.to_hex().cmp(&b.genome.to_hex()))
    });
    front.dedup_by(|a, b| a.genome == b.genome);
    Ok(front)
}

/// Front-aligned assembly of per-layer populations into `count` full
/// architectures (duplicates dropped). Assembly `j` takes, from every layer,
/// the member at relative position `j / (count - 1)` of that layer's sorted
/// first front, so low-error cells go with low-error cells and cheap with cheap.
pub fn assemble_front(populations: &[Population<Genome>], count: usize) -> Result<Vec<FullArchitecture>> {
    let fronts = populations
        .iter()
        .map(sorted_first_front)
        .collect::<Result<Vec<_>>>()?;
    let layers = populations.len();
    let mut out: Vec<FullArchitecture> = Vec::new();
    for j in 0..count {
        let q = if count > 1 { j as f64 / (count - 1) as f64 } else { 0.0 };
        let picks: Vec<Genome> = fronts
            .iter()
            .map(|f| f[(q * (f.len() - 1) as f64).round() as usize].genome.clone())
            .collect();
        let arch = compose(&picks, layers)?;
        if !out.iter().any(|a| a.key() == arch.key()) {
            out.push(arch);
        }
    }
    Ok(out)
}

/// Nondominated subset, ordered by objectives then architecture key.
fn nondominated(mut entries: Vec<FrontArchitecture>) -> Vec<FrontArchitecture> {
    entries.sort_by(|a, b| {
        a.objectives
            .partial_cmp(&b.objectives)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.architecture.cmp(&b.architecture))
    });
    entries.dedup_by(|a, b| a.architecture == b.architecture);
    let points: Vec<&[f64]> = entries.iter().map(|e| e.objectives.as_slice()).collect();
    let mut keep = pareto_front_indices(&points);
    keep.sort_unstable();
    keep.into_iter().map(|i| entries[i].clone()).collect()
}

pub struct Search {
    engine: Engine,
    state: SearchState,
}

impl Search {
    /// Initializes the configured searcher (no warm-up yet).
    pub fn new(engine: Engine) -> Result<Self> {
        let state = match engine.config().searcher {
            SearcherKind::Mpae | SearcherKind::Coevolution => SearchState::Cells(engine.initialize_cells()?),
            SearcherKind::Global => SearchState::Global(engine.initialize_global()?),
        };
        Ok(Self { engine, state })
    }

    pub fn from_config(config: SearchConfig) -> Result<Self> {
        Self::new(Engine::from_config(config)?)
    }

    /// Continues from a saved state. `log` must hold the events written so
    /// far; it is cut back to the state's `log_len`.
    pub fn resume(engine: Engine, mut state: SearchState, mut log: EventLog) -> Result<Self> {
        let (searcher, log_len) = dispatch!(&state, s => (s.searcher, s.log_len));
        if searcher != engine.config().searcher {
            return Err(Error::Config(format!(
                "checkpoint holds a {searcher} run, config asks for {}",
                engine.config().searcher
            )));
        }
        if log.len() < log_len {
            return Err(Error::Parse(format!(
                "event log holds {} events, checkpoint expects {log_len}",
                log.len()
            )));
        }
        log.truncate(log_len);
        dispatch!(&mut state, s => s.log = log);
        Ok(Self { engine, state })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn config(&self) -> &SearchConfig {
        self.engine.config()
    }

    pub fn state(&self) -> &SearchState {
        &self.state
    }

    pub fn into_state(self) -> SearchState {
        self.state
    }

    pub fn generation(&self) -> u64 {
        dispatch!(&self.state, s => s.generation)
    }

    pub fn warmed_up(&self) -> bool {
        dispatch!(&self.state, s => s.warmed_up)
    }

    pub fn evaluations(&self) -> u64 {
        dispatch!(&self.state, s => s.evaluations)
    }

    pub fn evaluations_per_generation(&self) -> &[u64] {
        dispatch!(&self.state, s => &s.evaluations_per_generation)
    }

    pub fn operator_stats(&self) -> OperatorStats {
        dispatch!(&self.state, s => s.operator_stats)
    }

    pub fn sampling_stats(&self) -> SamplingStats {
        dispatch!(&self.state, s => s.sampling_stats)
    }

    pub fn log(&self) -> &EventLog {
        dispatch!(&self.state, s => &s.log)
    }

    pub fn state_hash(&self) -> String {
        self.state.hash()
    }

    pub fn warm_up(&mut self) -> Result<()> {
        let steps = self.config().warm_up_steps();
        let engine = &self.engine;
        dispatch!(&mut self.state, s => engine.warm_up(s, steps))
    }

    /// Whether another generation fits the generation count and budget.
    pub fn can_continue(&self) -> bool {
        let config = self.config();
        if self.generation() >= config.generations {
            return false;
        }
        match config.max_evaluations {
            Some(cap) => self.evaluations() + self.engine.evaluations_per_generation() <= cap,
            None => true,
        }
    }

    /// One generation of the configured searcher.
    pub fn step(&mut self) -> Result<()> {
        let engine = &self.engine;
        match (&mut self.state, engine.config().searcher) {
            (SearchState::Cells(s), SearcherKind::Mpae) => engine.evolve_generation(s),
            (SearchState::Cells(s), SearcherKind::Coevolution) => engine.evolve_generation_coevolution(s),
            (SearchState::Global(s), SearcherKind::Global) => engine.evolve_generation_global(s),
            _ => Err(Error::Config("state does not match the configured searcher".into())),
        }
    }

    /// Warm-up (if still pending) followed by generations until done,
    /// calling `after` once per finished generation.
    pub fn run_with(&mut self, mut after: impl FnMut(&Search) -> Result<()>) -> Result<()> {
        if !self.warmed_up() {
            self.warm_up()?;
        }
        while self.can_continue() {
            self.step()?;
            after(self)?;
        }
        Ok(())
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_| Ok(()))
    }

    /// Members of every final population.
    pub fn final_members(&self) -> Result<Vec<FinalMember>> {
        dispatch!(&self.state, s => final_members(&s.populations))
    }

    /// The nondominated full architectures the run ends with. Cell searchers
    /// evaluate `population_size` front-aligned assemblies (see
    /// [`assemble_front`]); these calls are not counted in the generation
    /// budget. Global search reads its final population.
    pub fn final_front(&self) -> Result<Vec<FrontArchitecture>> {
        let entries = match &self.state {
            SearchState::Cells(s) => {
                let archs = assemble_front(&s.populations, self.config().population_size)?;
                let backend = self.engine.backend();
                let values = par::map_ordered(&archs, |a| backend.evaluate(a, Some(&s.supernet)));
                archs
                    .iter()
                    .zip(values)
                    .map(|(a, v)| {
                        Ok(FrontArchitecture {
                            architecture: a.key(),
                            cells: a.genomes().iter().map(Genome::to_hex).collect(),
                            objectives: v?.values().to_vec(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            SearchState::Global(s) => {
                let mut out = Vec::new();
                for m in s.populations.iter().flat_map(|p| &p.members) {
                    let eval = m.evaluation.as_ref().ok_or(Error::Unevaluated(m.id))?;
                    out.push(FrontArchitecture {
                        architecture: eval.architecture.clone(),
                        cells: m.genome.layers().iter().map(Genome::to_hex).collect(),
                        objectives: eval.objectives.values().to_vec(),
                    });
                }
                out
            }
        };
        Ok(nondominated(entries))
    }

    /// Archive members of every population.
    pub fn archive_members(&self) -> Result<Vec<FinalMember>> {
        dispatch!(&self.state, s => {
            let mut out = Vec::new();
            for p in &s.populations {
                for m in &p.archive.members {
                    out.push(final_member(p.archive.owner_layer, m)?);
                }
            }
            Ok(out)
        })
    }
}
