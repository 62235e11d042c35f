use mpae::analysis::attained_front;
use mpae::config::{BackendKind, SearchConfig, SearcherKind};
use mpae::engine::selection::nondominated_fronts;
use mpae::engine::Engine;
use mpae::evaluation::{Backend, LandscapeParams, SyntheticLandscape, TabularBenchmark, ERROR};
use mpae::genome::{CellShape, OpVocabulary};
use mpae::log::{Event, EventLog};
use mpae::migration::MigrationPolicy;
use mpae::oracle;
use mpae::persist::Checkpoint;
use mpae::search::{Search, SearchState};
use proptest::prelude::*;

fn table(nodes: usize, ops: usize, layers: usize) -> TabularBenchmark {
    let shape = CellShape::new(nodes, ops).unwrap();
    let vocab = OpVocabulary::for_ops(ops);
    let landscape = SyntheticLandscape::new(shape, layers, vocab.clone(), LandscapeParams::default());
    oracle::build_table(&Backend::Synthetic(landscape), shape, layers, vocab, oracle::DEFAULT_ENUMERATION_CAP).unwrap()
}

fn small(searcher: SearcherKind, seed: u64, layers: usize) -> SearchConfig {
    let mut c = SearchConfig {
        searcher,
        seed,
        layers,
        population_size: 8,
        generations: 4,
        archive_size: 3,
        steps_per_arch_update: 3,
        ..SearchConfig::default()
    };
    c.cell.nodes = 2;
    c.cell.ops = 3;
    c.migration = MigrationPolicy {
        base_count: 2,
        depth: 2,
        max_total: 4,
    };
    c
}

/// Header-free JSON lines, so logs of different searchers compare.
fn body(log: &EventLog) -> Vec<String> {
    log.events()
        .iter()
        .filter(|e| !matches!(e, Event::Header { .. }))
        .map(EventLog::line)
        .collect()
}

fn assert_same_trace(a: &[String], b: &[String], what: &str) {
    if let Some(i) = (0..a.len().min(b.len())).find(|&i| a[i] != b[i]) {
        panic!("{what}: event {i} differs\n  {}\n  {}", a[i], b[i]);
    }
    assert_eq!(a.len(), b.len(), "{what}: lengths differ");
}

#[test]
fn single_layer_searchers_are_trace_equal() {
    for seed in 0..4 {
        let logs: Vec<Vec<String>> = SearcherKind::ALL
            .iter()
            .map(|&k| {
                let mut c = small(k, seed, 1);
                c.migration = MigrationPolicy::disabled();
                c.backend.kind = BackendKind::Surrogate;
                let mut s = Search::from_config(c).unwrap();
                s.run().unwrap();
                body(s.log())
            })
            .collect();
        assert!(!logs[0].is_empty());
        assert_same_trace(&logs[0], &logs[1], &format!("mpae vs coevolution, seed {seed}"));
        assert_same_trace(&logs[0], &logs[2], &format!("mpae vs global, seed {seed}"));
    }
}

#[test]
fn coevolution_spends_the_migrant_budget_on_offspring() {
    use mpae::engine::individual::Origin;
    for seed in 0..3 {
        let coev = small(SearcherKind::Coevolution, seed, 3);
        let planned = Engine::from_config(small(SearcherKind::Mpae, seed, 3)).unwrap().evaluations_per_generation();
        assert_eq!(Engine::from_config(coev.clone()).unwrap().evaluations_per_generation(), planned);
        let mut s = Search::from_config(coev).unwrap();
        s.run().unwrap();
        assert!(s.log().individuals().all(|r| r.origin != Origin::Migrant));
    }
}

#[test]
fn elitism_holds_with_a_fixed_context() {
    let table = table(2, 3, 1);
    for seed in 0..6 {
        let mut c = small(SearcherKind::Mpae, seed, 1);
        c.generations = 8;
        c.migration = MigrationPolicy::disabled();
        c.backend.kind = BackendKind::Tabular;
        let mut s = Search::new(Engine::new(c, Backend::Tabular(table.clone())).unwrap()).unwrap();
        s.warm_up().unwrap();
        let mut best = f64::INFINITY;
        while s.can_continue() {
            s.step().unwrap();
            let SearchState::Cells(state) = s.state() else { unreachable!() };
            let now = state.populations[0]
                .members
                .iter()
                .map(|m| m.objectives().unwrap().values()[ERROR])
                .fold(f64::INFINITY, f64::min);
            assert!(now <= best, "seed {seed}: best error rose from {best} to {now}");
            best = now;
        }
    }
}

fn check_population_invariants(state: &SearchState, n: usize, m: usize) {
    let SearchState::Cells(state) = state else { unreachable!() };
    for p in &state.populations {
        assert_eq!(p.members.len(), n);
        assert_eq!(p.archive.members.len(), m);
        for member in &p.members {
            member.genome.validate().unwrap();
        }
        let points = p.objectives().unwrap();
        let first = &nondominated_fronts(&points)[0];
        let first_ids: Vec<u64> = first.iter().map(|&i| p.members[i].id).collect();
        let fits = first.len() >= m;
        for a in &p.archive.members {
            assert!(p.members.iter().any(|x| x.id == a.id), "archive member {} not in population", a.id);
            if fits {
                assert!(first_ids.contains(&a.id), "archive member {} outside the first front", a.id);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn population_and_archive_invariants(seed in 0u64..1000, layers in 1usize..4, searcher in 0usize..2) {
        let c = small(SearcherKind::ALL[searcher], seed, layers);
        let (n, m) = (c.population_size, c.archive_size);
        let mut s = Search::from_config(c).unwrap();
        check_population_invariants(s.state(), n, m);
        s.warm_up().unwrap();
        while s.can_continue() {
            s.step().unwrap();
            check_population_invariants(s.state(), n, m);
        }
    }

    #[test]
    fn per_generation_budget_matches_the_plan(seed in 0u64..1000, layers in 1usize..5) {
        for k in SearcherKind::ALL {
            let c = small(k, seed, layers);
            let engine = Engine::from_config(c).unwrap();
            let planned = engine.evaluations_per_generation();
            let initial = engine.initial_evaluations();
            let mut s = Search::new(engine).unwrap();
            s.run().unwrap();
            let counts = s.evaluations_per_generation();
            prop_assert_eq!(counts[0], initial);
            prop_assert!(counts[1..].iter().all(|&x| x == planned));
        }
    }
}

#[test]
fn resuming_after_every_generation_changes_nothing() {
    for k in SearcherKind::ALL {
        let c = small(k, 17, 3);
        let mut straight = Search::from_config(c.clone()).unwrap();
        straight.run().unwrap();

        let mut s = Search::from_config(c.clone()).unwrap();
        s.warm_up().unwrap();
        while s.can_continue() {
            s.step().unwrap();
            let text = Checkpoint::new(c.clone(), s.state().clone()).to_json();
            let back = Checkpoint::from_json(&text).unwrap();
            let log = EventLog::read(s.log().to_jsonl().as_bytes()).unwrap();
            s = Search::resume(Engine::from_config(back.config).unwrap(), back.state, log).unwrap();
        }
        assert_eq!(s.state_hash(), straight.state_hash(), "{k}");
        assert_eq!(s.log().hash(), straight.log().hash(), "{k}");
    }
}

#[test]
fn resume_rejects_a_short_log_and_a_different_searcher() {
    let c = small(SearcherKind::Mpae, 1, 2);
    let s = Search::from_config(c.clone()).unwrap();
    let state = s.state().clone();
    assert!(Search::resume(Engine::from_config(c.clone()).unwrap(), state.clone(), EventLog::new()).is_err());
    let other = Engine::from_config(c.with_searcher(SearcherKind::Coevolution)).unwrap();
    assert!(Search::resume(other, state, s.log().clone()).is_err());
}

#[test]
fn evaluation_cap_stops_before_overrun() {
    let mut c = small(SearcherKind::Mpae, 2, 2);
    c.generations = 50;
    let engine = Engine::from_config(c.clone()).unwrap();
    let cap = engine.initial_evaluations() + 3 * engine.evaluations_per_generation() + 1;
    c.max_evaluations = Some(cap);
    let mut s = Search::from_config(c).unwrap();
    s.run().unwrap();
    assert_eq!(s.generation(), 3);
    assert!(s.evaluations() <= cap);
}

#[test]
fn final_front_is_nondominated_and_deterministic() {
    for k in SearcherKind::ALL {
        let run = || {
            let mut s = Search::from_config(small(k, 4, 3)).unwrap();
            s.run().unwrap();
            s.final_front().unwrap()
        };
        let front = run();
        assert_eq!(front, run());
        assert!(!front.is_empty());
        for a in &front {
            assert_eq!(a.cells.len(), 3);
            for b in &front {
                let dominated = b.objectives.iter().zip(&a.objectives).all(|(x, y)| x <= y)
                    && b.objectives.iter().zip(&a.objectives).any(|(x, y)| x < y);
                assert!(!dominated);
            }
        }
    }
}

#[test]
fn recovery_on_the_enumerable_shape_reaches_the_true_front() {
    let table = table(1, 2, 3);
    let reference = oracle::reference_point(&table);
    let target = oracle::front_hypervolume(&oracle::true_front(&table), &reference);
    let mut c = small(SearcherKind::Mpae, 0, 3);
    c.cell.nodes = 1;
    c.cell.ops = 2;
    c.population_size = 16;
    c.archive_size = 8;
    c.generations = 30;
    c.backend.kind = BackendKind::Tabular;
    let mut s = Search::new(Engine::new(c, Backend::Tabular(table)).unwrap()).unwrap();
    s.run().unwrap();
    let mut attained = attained_front(s.log());
    for f in s.final_front().unwrap() {
        attained.insert(&f.objectives);
    }
    assert!(attained.hypervolume(&reference) >= 0.95 * target);
}
