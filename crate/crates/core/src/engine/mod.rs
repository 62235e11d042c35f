//! The alternate-evolution engine.
//!
//! One population per layer. Each generation visits the layers in ascending
//! order; for layer `l` it trains the surrogate, re-evaluates the population
//! with every other layer filled by that layer's archive-best cell, breeds
//! offspring, gathers migrants, and keeps the best `N` of the merged pool.
//! The baselines reuse the same pieces (see [`crate::baselines`]).

pub mod individual;
pub mod operators;
pub mod selection;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{SearchConfig, SearcherKind};
use crate::error::{Error, Result};
use crate::evaluation::{Backend, Evaluator, SurrogateSupernetState};
use crate::genome::{random_genome, Genome};
use crate::log::{Event, EventLog, IndividualRecord, LOG_FORMAT_VERSION};
use crate::migration::{build_migrant_pool, migrant_plan, MigrationArchive, MigrationPolicy};
use crate::par;
use crate::rng::{population_stream, RngStream, GLOBAL_STREAM};

use individual::{Chromosome, Evaluation, Individual, Origin, Population};
use operators::{genetic_manipulation, OperatorStats};
use selection::{environmental_selection, environmental_selection_owned};

/// Bernoulli inclusion counts of the surrogate batch sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingStats {
    pub candidates: u64,
    pub included: u64,
}

/// Everything a search carries between generations.
///
/// The event log itself is not serialized with the state; `log_len` records
/// how many events belong to it so a resumed run can cut its log file back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunState<G = Genome> {
    pub searcher: SearcherKind,
    pub seed: u64,
    /// Completed generations.
    pub generation: u64,
    /// Layer steps of the current generation already committed.
    pub layer_cursor: usize,
    pub populations: Vec<Population<G>>,
    pub supernet: SurrogateSupernetState,
    pub global_rng: RngStream,
    pub population_rngs: Vec<RngStream>,
    pub next_id: u64,
    pub evaluations: u64,
    /// Evaluator calls per generation; entry 0 is initialization.
    pub evaluations_per_generation: Vec<u64>,
    pub warmed_up: bool,
    pub operator_stats: OperatorStats,
    pub sampling_stats: SamplingStats,
    /// Context cells frozen at the start of a coevolution generation.
    pub context_snapshot: Option<Vec<Genome>>,
    pub log_len: usize,
    #[serde(skip)]
    pub log: EventLog,
}

impl<G: Chromosome> RunState<G> {
    pub(crate) fn empty(config: &SearchConfig, populations: usize) -> Result<Self> {
        let shape = config.shape()?;
        let mut state = Self {
            searcher: config.searcher,
            seed: config.seed,
            generation: 0,
            layer_cursor: 0,
            populations: Vec::new(),
            supernet: SurrogateSupernetState::new(config.layers, shape, config.supernet)?,
            global_rng: RngStream::new(config.seed, GLOBAL_STREAM),
            population_rngs: (0..populations)
                .map(|l| RngStream::new(config.seed, population_stream(l)))
                .collect(),
            next_id: 0,
            evaluations: 0,
            evaluations_per_generation: Vec::new(),
            warmed_up: false,
            operator_stats: OperatorStats::default(),
            sampling_stats: SamplingStats::default(),
            context_snapshot: None,
            log_len: 0,
            log: EventLog::new(),
        };
        state.record(Event::Header {
            format_version: LOG_FORMAT_VERSION,
            searcher: config.searcher,
            seed: config.seed,
        });
        Ok(state)
    }

    pub fn record(&mut self, event: Event) {
        self.log.push(event);
        self.log_len += 1;
    }

    /// SHA-256 over the serialized state (the log enters only through `log_len`).
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("state serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Clone without the event log.
    fn snapshot(&self) -> Self {
        let log = EventLog::new();
        let Self {
            searcher,
            seed,
            generation,
            layer_cursor,
            populations,
            supernet,
            global_rng,
            population_rngs,
            next_id,
            evaluations,
            evaluations_per_generation,
            warmed_up,
            operator_stats,
            sampling_stats,
            context_snapshot,
            log_len,
            log: _,
        } = self;
        Self {
            searcher: *searcher,
            seed: *seed,
            generation: *generation,
            layer_cursor: *layer_cursor,
            populations: populations.clone(),
            supernet: supernet.clone(),
            global_rng: global_rng.clone(),
            population_rngs: population_rngs.clone(),
            next_id: *next_id,
            evaluations: *evaluations,
            evaluations_per_generation: evaluations_per_generation.clone(),
            warmed_up: *warmed_up,
            operator_stats: *operator_stats,
            sampling_stats: *sampling_stats,
            context_snapshot: context_snapshot.clone(),
            log_len: *log_len,
            log,
        }
    }

    fn restore(&mut self, snapshot: Self) {
        let mut log = std::mem::take(&mut self.log);
        *self = snapshot;
        log.truncate(self.log_len);
        self.log = log;
    }

    /// Evaluator calls made since the last completed generation.
    pub fn evaluations_in_current_generation(&self) -> u64 {
        self.evaluations - self.evaluations_per_generation.iter().sum::<u64>()
    }

    pub(crate) fn finish_generation(&mut self) {
        self.generation += 1;
        self.layer_cursor = 0;
        self.context_snapshot = None;
        let used = self.evaluations_in_current_generation();
        self.evaluations_per_generation.push(used);
        self.record(Event::GenerationEnd {
            generation: self.generation,
            evaluations: self.evaluations,
            evaluations_in_generation: used,
        });
    }
}

/// Runs `step` on `state`; on error the state (and log) return to where
/// they were before the step.
pub(crate) fn with_rollback<G: Chromosome>(
    state: &mut RunState<G>,
    step: impl FnOnce(&mut RunState<G>) -> Result<()>,
) -> Result<()> {
    let snapshot = state.snapshot();
    step(state).inspect_err(|_| state.restore(snapshot))
}

/// Configuration plus evaluator; drives every searcher.
#[derive(Clone, Debug)]
pub struct Engine {
    config: SearchConfig,
    backend: Backend,
}

impl Engine {
    pub fn new(config: SearchConfig, backend: Backend) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, backend })
    }

    pub fn from_config(config: SearchConfig) -> Result<Self> {
        let backend = config.build_backend()?;
        Self::new(config, backend)
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    /// Migrants MPAE brings into each layer per generation. Archives always
    /// hold `archive_size` members, so this depends on the config alone.
    pub fn planned_migrants(&self) -> Vec<usize> {
        let sizes = vec![self.config.archive_size; self.config.layers];
        (0..self.config.layers)
            .map(|l| {
                migrant_plan(&self.config.migration, l, &sizes)
                    .iter()
                    .map(|&(_, c)| c)
                    .sum()
            })
            .collect()
    }

    /// Evaluator calls in one generation, identical for every searcher.
    pub fn evaluations_per_generation(&self) -> u64 {
        let n = self.config.population_size as u64;
        let migrants: usize = self.planned_migrants().iter().sum();
        self.config.layers as u64 * 2 * n + migrants as u64
    }

    /// Evaluator calls of the initialization pass.
    pub fn initial_evaluations(&self) -> u64 {
        (self.config.layers * self.config.population_size) as u64
    }

    /// Evaluates `members` in parallel and stores the results in order.
    pub(crate) fn evaluate_members<G: Chromosome>(
        &self,
        members: &mut [Individual<G>],
        context: &[Genome],
        layer: usize,
        supernet: &SurrogateSupernetState,
        generation: u64,
    ) -> Result<()> {
        let layers = self.config.layers;
        let results = par::map_ordered(members, |m| -> Result<Evaluation> {
            let arch = m.genome.architecture(context, layer, layers)?;
            let objectives = self.backend.evaluate(&arch, Some(supernet))?;
            Ok(Evaluation {
                objectives,
                architecture: arch.key(),
                generation,
            })
        });
        for (m, r) in members.iter_mut().zip(results) {
            m.evaluation = Some(r?);
        }
        Ok(())
    }

    pub(crate) fn evaluate_and_log<G: Chromosome>(
        &self,
        state: &mut RunState<G>,
        members: &mut [Individual<G>],
        context: &[Genome],
        layer: usize,
        generation: u64,
        role: Option<Origin>,
    ) -> Result<()> {
        self.evaluate_members(members, context, layer, &state.supernet, generation)?;
        state.evaluations += members.len() as u64;
        for m in members.iter() {
            let objectives = m.objectives()?.values().to_vec();
            state.record(Event::Individual(IndividualRecord {
                generation,
                layer,
                id: m.id,
                origin: role.unwrap_or(m.origin()),
                genome: m.genome.to_hex(),
                objectives,
            }));
        }
        Ok(())
    }

    /// `steps` surrogate training steps on Bernoulli-sampled batches.
    pub(crate) fn train<G: Chromosome>(&self, state: &mut RunState<G>, steps: u64) -> Result<()> {
        for _ in 0..steps {
            let pops: Vec<Vec<&G>> = state
                .populations
                .iter()
                .map(|p| p.members.iter().map(|m| &m.genome).collect())
                .collect();
            let batch = G::training_batch(&pops, self.config.layers, &mut state.global_rng)?;
            state.sampling_stats.candidates += batch.candidates;
            state.sampling_stats.included += batch.included;
            state.supernet.train_step(&batch.architectures);
        }
        Ok(())
    }

    /// Surrogate-only warm-up before the first generation.
    pub fn warm_up<G: Chromosome>(&self, state: &mut RunState<G>, steps: u64) -> Result<()> {
        if state.generation > 0 || state.layer_cursor > 0 || state.warmed_up {
            return Err(Error::Config("warm-up must precede evolution".into()));
        }
        self.train(state, steps)?;
        state.warmed_up = true;
        let trained_steps = state.supernet.trained_steps();
        state.record(Event::WarmUp { steps, trained_steps });
        Ok(())
    }

    pub(crate) fn check_ready<G>(&self, state: &RunState<G>) -> Result<()> {
        if !state.warmed_up {
            return Err(Error::Config("evolution requires a completed warm-up".into()));
        }
        Ok(())
    }

    /// Initial per-layer populations for MPAE and coevolution: `N` random
    /// genomes each, evaluated with member 0 of every other layer as context.
    pub fn initialize_cells(&self) -> Result<RunState<Genome>> {
        let config = &self.config;
        let (layers, n) = (config.layers, config.population_size);
        let shape = config.shape()?;
        let mut state = RunState::empty(config, layers)?;
        for l in 0..layers {
            let rng = &mut state.population_rngs[l];
            let mut members = Vec::with_capacity(n);
            for _ in 0..n {
                members.push(Individual::new(state.next_id, random_genome(shape, rng), Origin::Initial, 0));
                state.next_id += 1;
            }
            state.populations.push(Population {
                layer_index: l,
                members,
                archive: MigrationArchive::new(l),
            });
        }
        let context: Vec<Genome> = state.populations.iter().map(|p| p.members[0].genome.clone()).collect();
        for l in 0..layers {
            let mut members = std::mem::take(&mut state.populations[l].members);
            self.evaluate_and_log(&mut state, &mut members, &context, l, 0, None)?;
            let archive = environmental_selection(&members, config.archive_size)?;
            let pop = &mut state.populations[l];
            pop.members = members;
            pop.archive.members = archive;
        }
        state.evaluations_per_generation.push(state.evaluations);
        Ok(state)
    }

    /// One breeding step for population `index`: re-evaluate, breed
    /// `offspring` children, add migrants, evaluate, select, update archive.
    pub(crate) fn evolve_population<G: Chromosome>(
        &self,
        state: &mut RunState<G>,
        index: usize,
        context: &[Genome],
        layer: usize,
        offspring: usize,
        migrants: impl FnOnce(&mut RunState<G>) -> Result<Vec<Individual<G>>>,
    ) -> Result<()> {
        let config = &self.config;
        let generation = state.generation + 1;
        let mut parents = std::mem::take(&mut state.populations[index].members);
        self.evaluate_and_log(state, &mut parents, context, layer, generation, Some(Origin::ParentCarryover))?;
        let (mut children, stats) = genetic_manipulation(
            &parents,
            offspring,
            config.rates(),
            &mut state.next_id,
            generation,
            &mut state.population_rngs[index],
        )?;
        state.operator_stats.merge(&stats);
        state.populations[index].members = parents;
        children.extend(migrants(state)?);
        self.evaluate_and_log(state, &mut children, context, layer, generation, None)?;
        let mut pool = std::mem::take(&mut state.populations[index].members);
        pool.extend(children);
        let survivors = environmental_selection_owned(pool, config.population_size)?;
        let pop = &mut state.populations[index];
        pop.archive.members = environmental_selection(&survivors, config.archive_size)?;
        pop.members = survivors;
        Ok(())
    }

    /// One MPAE generation: layers in ascending order, each trained, evolved
    /// and migrated into against the current archive-best context.
    pub fn evolve_generation(&self, state: &mut RunState<Genome>) -> Result<()> {
        self.check_ready(state)?;
        let policy = self.config.migration;
        while state.layer_cursor < self.config.layers {
            let l = state.layer_cursor;
            with_rollback(state, |state| {
                self.train(state, self.config.steps_per_arch_update)?;
                let context = archive_context(&state.populations)?;
                let n = self.config.population_size;
                self.evolve_population(state, l, &context, l, n, |state| {
                    mpae_migrants(state, l, &policy)
                })?;
                state.layer_cursor += 1;
                Ok(())
            })?;
        }
        state.finish_generation();
        Ok(())
    }
}

fn mpae_migrants(state: &mut RunState<Genome>, receiver: usize, policy: &MigrationPolicy) -> Result<Vec<Individual>> {
    let generation = state.generation + 1;
    build_migrant_pool(receiver, &state.populations, policy, &mut state.next_id, generation)
}

/// Archive-best cell of every population.
pub fn archive_context<G: Chromosome>(populations: &[Population<G>]) -> Result<Vec<Genome>> {
    populations
        .iter()
        .map(|p| Ok(p.archive.best()?.genome.cells()[0].clone()))
        .collect()
}
