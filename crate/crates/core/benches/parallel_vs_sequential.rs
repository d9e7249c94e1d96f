use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgff::fixtures;
use dgff::sampling::{dgff_covariance, MonteCarlo};
use dgff::{Execution, HadamardFamily};

const POLICIES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn construction(c: &mut Criterion) {
    let fx = fixtures::grid13();
    let mut group = c.benchmark_group("build_grid13");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| HadamardFamily::build(&fx.graph, &fx.foliation, exec).unwrap())
        });
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let fx = fixtures::grid5();
    let fam = HadamardFamily::build(&fx.graph, &fx.foliation, Execution::Sequential).unwrap();
    let mut group = c.benchmark_group("dgff_covariance_grid5_20k");
    group.sample_size(10);
    for (name, exec) in POLICIES {
        let mc = MonteCarlo::new(1, 20_000, exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dgff_covariance(&fam, &mc).1.max_abs_z)
        });
    }
    group.finish();
}

criterion_group!(benches, construction, monte_carlo);
criterion_main!(benches);
