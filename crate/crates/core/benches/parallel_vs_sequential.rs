use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparseconv::dense_conv::dense_conv;
use sparseconv::instances::{generate, InstanceSpec, Structure};
use sparseconv::par;
use sparseconv::pipeline::{sparse_conv, PipelineConfig};

fn sparse(c: &mut Criterion) {
    let mut group = c.benchmark_group("sparse_conv");
    group.sample_size(10);
    for k in [1usize << 10, 1 << 12] {
        let spec = InstanceSpec { n: 1 << 30, k, max_value: 1 << 10, structure: Structure::Uniform, seed: 1 };
        let (a, b) = generate(&spec).unwrap();
        for parallel in [false, true] {
            let id = BenchmarkId::new(if parallel { "parallel" } else { "sequential" }, k);
            group.bench_with_input(id, &parallel, |bench, &parallel| {
                par::set_enabled(parallel);
                let cfg = PipelineConfig { parallel, ..PipelineConfig::with_seed(2) };
                bench.iter(|| sparse_conv(&a, &b, &cfg).unwrap());
            });
        }
    }
    group.finish();
}

fn dense(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_conv");
    group.sample_size(10);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1 << 20;
    let a: Vec<u64> = (0..n).map(|_| rng.gen_range(0..1 << 20)).collect();
    let b: Vec<u64> = (0..n).map(|_| rng.gen_range(0..1 << 20)).collect();
    for parallel in [false, true] {
        group.bench_function(if parallel { "parallel" } else { "sequential" }, |bench| {
            par::set_enabled(parallel);
            bench.iter(|| dense_conv(&a, &b).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, sparse, dense);
criterion_main!(benches);
