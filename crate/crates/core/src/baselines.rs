//! Reference searchers sharing the engine's operators and evaluator.
//!
//! * Coevolution: one population per layer without migration. All
//!   populations are updated against contexts frozen at the start of the
//!   generation, after one block of `L * steps_per_arch_update` training steps.
//! * Global: a single population of [`GlobalGenome`]s covering every layer.
//!   Each generation runs `L` inner iterations, each with its own training
//!   block, so the supernet sees the same number of steps as under MPAE.
//!
//! Both spend exactly MPAE's evaluator calls per generation: the slots MPAE
//! fills with migrants become extra offspring.

use crate::error::Result;
use crate::engine::individual::{GlobalGenome, Individual, Origin, Population};
use crate::engine::selection::{environmental_selection, environmental_selection_owned};
use crate::engine::{archive_context, with_rollback, Engine, RunState};
use crate::genome::Genome;
use crate::migration::MigrationArchive;

impl Engine {
    /// Initial global population: `L * N` random full genomes are evaluated
    /// (matching the per-layer searchers' initialization budget) and the best
    /// `N` kept.
    pub fn initialize_global(&self) -> Result<RunState<GlobalGenome>> {
        let config = self.config();
        let (layers, n) = (config.layers, config.population_size);
        let shape = config.shape()?;
        let mut state = RunState::empty(config, 1)?;
        let mut members = Vec::with_capacity(layers * n);
        for _ in 0..layers * n {
            let genome = GlobalGenome::random(shape, layers, &mut state.population_rngs[0]);
            members.push(Individual::new(state.next_id, genome, Origin::Initial, 0));
            state.next_id += 1;
        }
        self.evaluate_and_log(&mut state, &mut members, &[], 0, 0, None)?;
        let members = environmental_selection_owned(members, n)?;
        let archive = environmental_selection(&members, config.archive_size)?;
        state.populations.push(Population {
            layer_index: 0,
            members,
            archive: MigrationArchive {
                owner_layer: 0,
                members: archive,
            },
        });
        state.evaluations_per_generation.push(state.evaluations);
        Ok(state)
    }

    /// One coevolution generation.
    pub fn evolve_generation_coevolution(&self, state: &mut RunState<Genome>) -> Result<()> {
        self.check_ready(state)?;
        let config = self.config();
        let extra = self.planned_migrants();
        while state.layer_cursor < config.layers {
            let l = state.layer_cursor;
            with_rollback(state, |state| {
                if l == 0 {
                    self.train(state, config.layers as u64 * config.steps_per_arch_update)?;
                    state.context_snapshot = Some(archive_context(&state.populations)?);
                }
                let context = state.context_snapshot.clone().expect("snapshot taken at layer 0");
                let count = config.population_size + extra[l];
                self.evolve_population(state, l, &context, l, count, |_| Ok(Vec::new()))?;
                state.layer_cursor += 1;
                Ok(())
            })?;
        }
        state.finish_generation();
        Ok(())
    }

    /// One global-search generation (`L` inner iterations).
    pub fn evolve_generation_global(&self, state: &mut RunState<GlobalGenome>) -> Result<()> {
        self.check_ready(state)?;
        let config = self.config();
        let extra = self.planned_migrants();
        while state.layer_cursor < config.layers {
            let step = state.layer_cursor;
            with_rollback(state, |state| {
                self.train(state, config.steps_per_arch_update)?;
                let count = config.population_size + extra[step];
                self.evolve_population(state, 0, &[], 0, count, |_| Ok(Vec::new()))?;
                state.layer_cursor += 1;
                Ok(())
            })?;
        }
        state.finish_generation();
        Ok(())
    }
}

/// Runs a full global search (initialization, warm-up, all generations).
pub fn run_global_search(engine: &Engine) -> Result<RunState<GlobalGenome>> {
    let mut state = engine.initialize_global()?;
    engine.warm_up(&mut state, engine.config().warm_up_steps())?;
    for _ in 0..engine.config().generations {
        engine.evolve_generation_global(&mut state)?;
    }
    Ok(state)
}

/// Runs a full coevolution search (initialization, warm-up, all generations).
pub fn run_coevolution(engine: &Engine) -> Result<RunState<Genome>> {
    let mut state = engine.initialize_cells()?;
    engine.warm_up(&mut state, engine.config().warm_up_steps())?;
    for _ in 0..engine.config().generations {
        engine.evolve_generation_coevolution(&mut state)?;
    }
    Ok(state)
}
