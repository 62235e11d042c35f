//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use mpae::analysis::{
    attained_front, best_error, checkpoint_generations, mann_whitney, median, origin_summary, MannWhitney,
};
use mpae::config::{BackendKind, SearchConfig, SearcherKind};
use mpae::engine::individual::{Evaluation, Individual, Origin};
use mpae::engine::selection::{select_indices, ParetoRanking};
use mpae::engine::Engine;
use mpae::evaluation::{Backend, LandscapeParams, ObjectiveVector, SyntheticLandscape};
use mpae::genome::{decode, encode, random_genome, CellShape, Genome, OpVocabulary};
use mpae::migration::similarity;
use mpae::oracle;
use mpae::par;
use mpae::search::Search;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIMILARITY_TOLERANCE: f64 = 1e-12;
const RECOVERY_FRACTION: f64 = 0.95;
const RECOVERY_SEEDS_REQUIRED: usize = 18;
const RECOVERY_TIME_LIMIT: Duration = Duration::from_secs(120);
const ABLATION_SEEDS: u64 = 20;
const ABLATION_GENERATIONS: u64 = 20;
const SIGNIFICANCE: f64 = 0.05;
const RATE_SIGMAS: f64 = 5.0;
const RATE_MIN_EVENTS: u64 = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("encoding round trip", encoding_round_trip),
        ("similarity oracle", similarity_oracle),
        ("selection oracle", selection_oracle),
        ("pareto recovery on the enumerable shape", pareto_recovery),
        ("ablation direction", ablation_direction),
        ("migration effect", migration_effect),
        ("determinism across thread counts", determinism),
        ("statistical rates", statistical_rates),
        ("budget parity", budget_parity),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        println!(
            "criterion {} {}: {} | {} | {:.1}s",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            name,
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn encoding_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut failures = 0;
    for nodes in [1, 2, 4] {
        for ops in [2, 4, 8] {
            let shape = CellShape::new(nodes, ops).unwrap();
            for _ in 0..1112 {
                let g = random_genome(shape, &mut rng);
                let dag = decode(&g).unwrap();
                let back = encode(&dag).unwrap();
                let redecoded = decode(&back).unwrap();
                if back != g || redecoded != dag {
                    failures += 1;
                }
                checked += 1;
            }
        }
    }
    outcome(
        failures == 0 && checked >= 10_000,
        format!("{checked} genomes over 9 shapes, {failures} failures"),
    )
}

fn evaluated(id: u64, genome: Genome, objectives: Vec<f64>) -> Individual {
    let mut m = Individual::new(id, genome, Origin::Initial, 0);
    m.evaluation = Some(Evaluation {
        objectives: ObjectiveVector::new(objectives).unwrap(),
        architecture: String::new(),
        generation: 0,
    });
    m
}

/// Direct arithmetic: normalize, rank by sum (ties to lower index), add up
/// the chosen genomes bit by bit and divide the overlap.
fn similarity_by_hand(gen_a: &Genome, objectives: &[Vec<f64>], genomes: &[Genome], depth: usize) -> f64 {
    let n = objectives.len();
    let mut sums = vec![0.0; n];
    for m in 0..objectives[0].len() {
        let column: Vec<f64> = objectives.iter().map(|o| o[m]).collect();
        let lo = column.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = column.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            for i in 0..n {
                sums[i] += (column[i] - lo) / (hi - lo);
            }
        }
    }
    let mut chosen: Vec<usize> = Vec::new();
    for _ in 0..depth {
        let mut best: Option<usize> = None;
        for i in 0..n {
            if chosen.contains(&i) {
                continue;
            }
            if best.is_none_or(|b| sums[i] < sums[b]) {
                best = Some(i);
            }
        }
        chosen.push(best.unwrap());
    }
    let mut overlap = 0u64;
    for &i in &chosen {
        for (x, y) in gen_a.bits().iter().zip(genomes[i].bits()) {
            overlap += u64::from(x * y);
        }
    }
    overlap as f64 / (depth * gen_a.len()) as f64
}

fn similarity_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut zero_failures = 0;
    for _ in 0..1000 {
        let shape = CellShape::new(rng.gen_range(1..=4), rng.gen_range(2..=8)).unwrap();
        let n = rng.gen_range(1..=24);
        let coarse = rng.gen_bool(0.3);
        let objectives: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                if coarse {
                    vec![rng.gen_range(0..4) as f64 / 4.0, rng.gen_range(0..3) as f64]
                } else {
                    vec![rng.gen::<f64>(), rng.gen::<f64>() * 50.0]
                }
            })
            .collect();
        let genomes: Vec<Genome> = (0..n).map(|_| random_genome(shape, &mut rng)).collect();
        let target: Vec<Individual> = genomes
            .iter()
            .zip(&objectives)
            .enumerate()
            .map(|(i, (g, o))| evaluated(i as u64, g.clone(), o.clone()))
            .collect();
        let depth = rng.gen_range(1..=n);
        let gen_a = random_genome(shape, &mut rng);
        let got = similarity(&gen_a, &target, depth).unwrap();
        let want = similarity_by_hand(&gen_a, &objectives, &genomes, depth);
        worst = worst.max((got - want).abs());
        if similarity(&Genome::zeros(shape), &target, depth).unwrap() != 0.0 {
            zero_failures += 1;
        }
    }
    outcome(
        worst <= SIMILARITY_TOLERANCE && zero_failures == 0,
        format!("1000 instances, max |diff| {worst:.3e} (tol {SIMILARITY_TOLERANCE:e}), {zero_failures} nonzero zero-genome similarities"),
    )
}

fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y)
}

/// Front index of every point by repeatedly peeling off the points no
/// remaining point dominates.
fn ranks_by_peeling(points: &[Vec<f64>]) -> Vec<usize> {
    let n = points.len();
    let mut rank = vec![usize::MAX; n];
    let mut r = 0;
    while rank.contains(&usize::MAX) {
        let front: Vec<usize> = (0..n)
            .filter(|&i| rank[i] == usize::MAX)
            .filter(|&i| !(0..n).any(|j| rank[j] == usize::MAX && dominates(&points[j], &points[i])))
            .collect();
        for i in front {
            rank[i] = r;
        }
        r += 1;
    }
    rank
}

/// Crowding distance within one front, boundaries infinite, objective ties
/// ordered by pool index.
fn crowding_by_hand(points: &[Vec<f64>], front: &[usize]) -> Vec<f64> {
    let mut d = vec![0.0; front.len()];
    for m in 0..points[0].len() {
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            points[front[a]][m]
                .partial_cmp(&points[front[b]][m])
                .unwrap()
                .then(front[a].cmp(&front[b]))
        });
        let lo = points[front[order[0]]][m];
        let hi = points[front[*order.last().unwrap()]][m];
        d[order[0]] = f64::INFINITY;
        d[*order.last().unwrap()] = f64::INFINITY;
        for w in 1..order.len().saturating_sub(1) {
            if hi > lo {
                d[order[w]] += (points[front[order[w + 1]]][m] - points[front[order[w - 1]]][m]) / (hi - lo);
            }
        }
    }
    d
}

fn selection_by_hand(points: &[Vec<f64>], birth: &[u64], keep: usize) -> Vec<usize> {
    let rank = ranks_by_peeling(points);
    let mut chosen = Vec::new();
    for r in 0.. {
        if chosen.len() == keep {
            break;
        }
        let front: Vec<usize> = (0..points.len()).filter(|&i| rank[i] == r).collect();
        if chosen.len() + front.len() <= keep {
            chosen.extend(front);
            continue;
        }
        let d = crowding_by_hand(points, &front);
        let mut order: Vec<usize> = (0..front.len()).collect();
        order.sort_by(|&a, &b| {
            d[b].partial_cmp(&d[a])
                .unwrap()
                .then(birth[front[a]].cmp(&birth[front[b]]))
                .then(front[a].cmp(&front[b]))
        });
        let room = keep - chosen.len();
        chosen.extend(order.into_iter().take(room).map(|w| front[w]));
    }
    chosen.sort_unstable();
    chosen
}

fn selection_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rank_mismatches = 0;
    let mut survivor_mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=64);
        let m = rng.gen_range(2..=3);
        let coarse = rng.gen_bool(0.5);
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| if coarse { rng.gen_range(0..5) as f64 } else { rng.gen::<f64>() })
                    .collect()
            })
            .collect();
        let birth: Vec<u64> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let keep = rng.gen_range(1..=n);
        let slices: Vec<&[f64]> = points.iter().map(Vec::as_slice).collect();
        if ParetoRanking::new(&slices).rank != ranks_by_peeling(&points) {
            rank_mismatches += 1;
        }
        if select_indices(&slices, &birth, keep) != selection_by_hand(&points, &birth, keep) {
            survivor_mismatches += 1;
        }
    }
    outcome(
        rank_mismatches == 0 && survivor_mismatches == 0,
        format!("200 pools, {rank_mismatches} front mismatches, {survivor_mismatches} survivor mismatches"),
    )
}

fn pareto_recovery() -> Outcome {
    let start = Instant::now();
    let shape = CellShape::new(1, 2).unwrap();
    let vocab = OpVocabulary::for_ops(2);
    let landscape = SyntheticLandscape::new(shape, 3, vocab.clone(), LandscapeParams::default());
    let table = oracle::build_table(
        &Backend::Synthetic(landscape),
        shape,
        3,
        vocab,
        oracle::DEFAULT_ENUMERATION_CAP,
    )
    .unwrap();
    let front = oracle::true_front(&table);
    let reference = oracle::reference_point(&table);
    let target = oracle::front_hypervolume(&front, &reference);
    let fractions: Vec<f64> = par::with_threads(1, || {
        (0..20)
            .map(|seed| {
                let mut c = SearchConfig {
                    seed,
                    layers: 3,
                    population_size: 16,
                    generations: 30,
                    archive_size: 8,
                    max_evaluations: Some(4000),
                    ..SearchConfig::default()
                };
                c.cell.nodes = 1;
                c.cell.ops = 2;
                c.backend.kind = BackendKind::Tabular;
                let engine = Engine::new(c, Backend::Tabular(table.clone())).unwrap();
                let mut search = Search::new(engine).unwrap();
                search.run().unwrap();
                let mut attained = attained_front(search.log());
                for f in search.final_front().unwrap() {
                    attained.insert(&f.objectives);
                }
                attained.hypervolume(&reference) / target
            })
            .collect()
    });
    let hits = fractions.iter().filter(|&&f| f >= RECOVERY_FRACTION).count();
    let elapsed = start.elapsed();
    let lowest = fractions.iter().cloned().fold(f64::INFINITY, f64::min);
    outcome(
        hits >= RECOVERY_SEEDS_REQUIRED && elapsed < RECOVERY_TIME_LIMIT,
        format!(
            "{hits}/20 seeds at >= {RECOVERY_FRACTION} of true-front hypervolume ({} front points, lowest fraction {lowest:.4}), {:.1}s on one thread",
            front.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn ablation_config(searcher: SearcherKind, seed: u64) -> SearchConfig {
    let mut c = SearchConfig {
        searcher,
        seed,
        layers: 8,
        population_size: 16,
        generations: ABLATION_GENERATIONS,
        archive_size: 4,
        ..SearchConfig::default()
    };
    c.cell.nodes = 2;
    c.cell.ops = 4;
    c.migration.base_count = 2;
    c.migration.depth = 4;
    c.migration.max_total = 8;
    c.backend.landscape.seed = seed;
    c
}

struct Ablation {
    best_errors: BTreeMap<SearcherKind, Vec<f64>>,
    /// Per MPAE run, whether migrants were not worse at each checkpoint.
    migrant_wins: Vec<[bool; 4]>,
    budgets: Vec<u64>,
}

fn ablation() -> &'static Ablation {
    static RUNS: OnceLock<Ablation> = OnceLock::new();
    RUNS.get_or_init(|| {
        let runs: Vec<Vec<(SearcherKind, f64, u64, Option<[bool; 4]>)>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..ABLATION_SEEDS)
                .map(|seed| {
                    scope.spawn(move || {
                        SearcherKind::ALL
                            .iter()
                            .map(|&searcher| {
                                let mut search = Search::from_config(ablation_config(searcher, seed)).unwrap();
                                search.run().unwrap();
                                let wins = (searcher == SearcherKind::Mpae).then(|| {
                                    checkpoint_generations(ABLATION_GENERATIONS)
                                        .map(|g| origin_summary(search.log(), g).migrants_not_worse())
                                });
                                (searcher, best_error(search.log()), search.evaluations(), wins)
                            })
                            .collect()
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut best_errors: BTreeMap<SearcherKind, Vec<f64>> = BTreeMap::new();
        let mut migrant_wins = Vec::new();
        let mut budgets = Vec::new();
        for (searcher, best, evaluations, wins) in runs.into_iter().flatten() {
            best_errors.entry(searcher).or_default().push(best);
            budgets.push(evaluations);
            migrant_wins.extend(wins);
        }
        Ablation {
            best_errors,
            migrant_wins,
            budgets,
        }
    })
}

fn ablation_direction() -> Outcome {
    let a = ablation();
    let mpae = &a.best_errors[&SearcherKind::Mpae];
    let coev = &a.best_errors[&SearcherKind::Coevolution];
    let global = &a.best_errors[&SearcherKind::Global];
    let first: MannWhitney = mann_whitney(mpae, coev);
    let second: MannWhitney = mann_whitney(coev, global);
    let equal_budget = a.budgets.windows(2).all(|w| w[0] == w[1]);
    outcome(
        first.p_less < SIGNIFICANCE && second.p_less < SIGNIFICANCE && equal_budget,
        format!(
            "median best error mpae {:.4}, coevolution {:.4}, global {:.4}; one-sided p mpae<coevolution {:.2e}, coevolution<global {:.2e}; {} evaluations per run",
            median(mpae).unwrap(),
            median(coev).unwrap(),
            median(global).unwrap(),
            first.p_less,
            second.p_less,
            a.budgets[0]
        ),
    )
}

fn migration_effect() -> Outcome {
    let a = ablation();
    let checkpoints = checkpoint_generations(ABLATION_GENERATIONS);
    let per_checkpoint: Vec<usize> = (0..4)
        .map(|q| a.migrant_wins.iter().filter(|w| w[q]).count())
        .collect();
    let runs_passing = a
        .migrant_wins
        .iter()
        .filter(|w| w.iter().filter(|&&x| x).count() >= 3)
        .count();
    outcome(
        runs_passing == a.migrant_wins.len(),
        format!(
            "{runs_passing}/{} runs with migrant median <= offspring median at >= 3 of 4 checkpoints {:?}; runs winning per checkpoint {:?}",
            a.migrant_wins.len(),
            checkpoints,
            per_checkpoint
        ),
    )
}

fn determinism_config(searcher: SearcherKind) -> SearchConfig {
    let mut c = SearchConfig {
        searcher,
        seed: 7,
        layers: 4,
        population_size: 12,
        generations: 5,
        archive_size: 4,
        ..SearchConfig::default()
    };
    c.cell.nodes = 2;
    c.cell.ops = 4;
    c.migration.base_count = 2;
    c.migration.depth = 2;
    c.migration.max_total = 4;
    c.backend.kind = BackendKind::Surrogate;
    c
}

fn determinism() -> Outcome {
    let mut mismatches = Vec::new();
    for searcher in SearcherKind::ALL {
        let logs: Vec<String> = [1, 1, 8, 8]
            .iter()
            .map(|&threads| {
                par::with_threads(threads, || {
                    let mut search = Search::from_config(determinism_config(searcher)).unwrap();
                    search.run().unwrap();
                    search.log().to_jsonl()
                })
            })
            .collect();
        if logs.windows(2).any(|w| w[0] != w[1]) {
            mismatches.push(searcher.as_str());
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("three searchers, two runs each at 1 and 8 threads, differing logs: {mismatches:?}"),
    )
}

fn within_sigmas(events: u64, trials: u64, p: f64) -> (bool, f64) {
    let freq = events as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (trials >= RATE_MIN_EVENTS && (freq - p).abs() <= RATE_SIGMAS * sigma, freq)
}

fn statistical_rates() -> Outcome {
    let mut c = SearchConfig {
        seed: 11,
        layers: 6,
        population_size: 32,
        generations: 30,
        archive_size: 4,
        ..SearchConfig::default()
    };
    c.cell.nodes = 4;
    c.cell.ops = 4;
    c.migration.base_count = 2;
    c.migration.depth = 2;
    c.migration.max_total = 4;
    let mut search = Search::from_config(c).unwrap();
    search.run().unwrap();
    let s = search.sampling_stats();
    let o = search.operator_stats();
    let (inclusion_ok, inclusion) = within_sigmas(s.included, s.candidates, 0.5);
    let (crossover_ok, crossover) = within_sigmas(o.crossover_events, o.crossover_trials, 0.25);
    let (mutation_ok, mutation) = within_sigmas(o.mutation_events, o.mutation_trials, 0.25);
    outcome(
        inclusion_ok && crossover_ok && mutation_ok,
        format!(
            "inclusion {inclusion:.4} over {}, crossover {crossover:.4} over {}, mutation {mutation:.4} over {} (bound {RATE_SIGMAS} sigma)",
            s.candidates, o.crossover_trials, o.mutation_trials
        ),
    )
}

fn budget_parity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    let configs = 12;
    for i in 0..configs {
        let n = rng.gen_range(4..=12);
        let m = rng.gen_range(1..=n.min(4));
        let mut c = SearchConfig {
            seed: i,
            layers: rng.gen_range(1..=5),
            population_size: n,
            generations: rng.gen_range(1..=3),
            archive_size: m,
            steps_per_arch_update: 2,
            ..SearchConfig::default()
        };
        c.cell.nodes = rng.gen_range(1..=3);
        c.cell.ops = rng.gen_range(2..=5);
        c.migration.base_count = rng.gen_range(0..=m);
        c.migration.depth = rng.gen_range(1..=m);
        c.migration.max_total = rng.gen_range(1..=n);
        let counts: Vec<Vec<u64>> = SearcherKind::ALL
            .iter()
            .map(|&k| {
                let mut search = Search::from_config(c.with_searcher(k)).unwrap();
                search.run().unwrap();
                search.evaluations_per_generation().to_vec()
            })
            .collect();
        if counts.windows(2).any(|w| w[0] != w[1]) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{configs} random configs, {mismatches} with differing per-generation evaluation counts"),
    )
}
