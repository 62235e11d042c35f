use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use mpae::config::{SearchConfig, SearcherKind};
use mpae::evaluation::{compose, FullArchitecture, LandscapeParams, SyntheticLandscape};
use mpae::genome::{random_genome, CellShape, OpVocabulary};
use mpae::par;
use mpae::search::Search;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn batch(shape: CellShape, layers: usize, count: usize) -> Vec<FullArchitecture> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..count)
        .map(|_| {
            let picks: Vec<_> = (0..layers).map(|_| random_genome(shape, &mut rng)).collect();
            compose(&picks, layers).unwrap()
        })
        .collect()
}

fn evaluation(c: &mut Criterion) {
    let shape = CellShape::new(4, 4).unwrap();
    let layers = 8;
    let landscape = SyntheticLandscape::new(shape, layers, OpVocabulary::for_ops(4), LandscapeParams::default());
    let archs = batch(shape, layers, 512);
    let mut g = c.benchmark_group("evaluate_512");
    g.bench_function("sequential", |b| {
        b.iter(|| par::map_sequential(&archs, |a| landscape.evaluate(a).unwrap()))
    });
    g.bench_function("parallel", |b| {
        b.iter(|| par::map_ordered(&archs, |a| landscape.evaluate(a).unwrap()))
    });
    g.finish();
}

fn generations(c: &mut Criterion) {
    let mut config = SearchConfig {
        searcher: SearcherKind::Mpae,
        layers: 6,
        population_size: 32,
        generations: 3,
        ..SearchConfig::default()
    };
    config.cell.nodes = 4;
    config.cell.ops = 4;
    let mut g = c.benchmark_group("search_3_generations");
    g.sample_size(10);
    for (name, threads) in [("one_thread", 1), ("all_threads", 0)] {
        g.bench_function(name, |b| {
            b.iter_batched(
                || Search::from_config(config.clone()).unwrap(),
                |mut s| par::with_threads(threads, || s.run().unwrap()),
                BatchSize::LargeInput,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, evaluation, generations);
criterion_main!(benches);
