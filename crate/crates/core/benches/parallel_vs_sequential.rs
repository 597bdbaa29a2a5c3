use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vaopt::adjoint::element_derivatives;
use vaopt::gradcheck::interior_point;
use vaopt::harmonic::harmonic_transmission;
use vaopt::presets::preset;
use vaopt::{Execution, Problem};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn problem(exec: Execution) -> Problem {
    let mut cfg = preset("lowpass-coarse").unwrap();
    cfg.output.cache_dir = None;
    Problem::new(cfg, exec).unwrap()
}

fn kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("coarse-lowpass");
    group.sample_size(10);
    for (name, exec) in MODES {
        let p = problem(exec);
        let x = interior_point(&p.initial_design());
        let phi = p.level_set(&x).unwrap();
        group.bench_function(BenchmarkId::new("assemble", name), |b| b.iter(|| p.assemble(&phi).unwrap()));
        group.bench_function(BenchmarkId::new("element-derivatives", name), |b| {
            b.iter(|| element_derivatives(&p.assembler, &phi, exec))
        });
        group.bench_function(BenchmarkId::new("evaluate-with-gradients", name), |b| {
            b.iter(|| p.evaluate_with_gradients(&x).unwrap())
        });
        let freqs: Vec<f64> = (4..=16).map(|m| 250.0 * m as f64).collect();
        group.bench_function(BenchmarkId::new("harmonic-sweep", name), |b| {
            b.iter(|| harmonic_transmission(&p, &phi, &freqs).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, kernels);
criterion_main!(benches);
