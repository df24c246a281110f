use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sns_core::noise::{NoisePath, NoiseSpec};
use sns_core::operators::{nonlinear_b, OperatorVariant};
use sns_core::par::{par_map, seq_map};
use sns_core::solver::{ForcingMode, IntegratorConfig, Model, ModelConfig};
use sns_core::ScalarSpectrum;

fn model(l: usize) -> Model {
    let mut cfg = ModelConfig::quiet(l, 0.5, OperatorVariant::DeltaOnly);
    cfg.omega = 1.0;
    cfg.alpha = 1.0;
    cfg.noise = NoiseSpec::new(0.5, 1.0, l, 1, 0.01);
    cfg.forcing.push(ForcingMode { l: 2, m: 0, re: 1.0, im: 0.0 });
    Model::new(cfg).unwrap()
}

// Eight independent members over one time unit, one noise path each.
fn ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for l in [12, 21] {
        let m = model(l);
        let icfg = IntegratorConfig::new(0.01);
        let members: Vec<u64> = (0..8).collect();
        let run = |&i: &u64| {
            let path = NoisePath::for_member(&m.config().noise, i);
            m.rds_phi(1.0, &path, &m.random_initial(7, i, 1.0, 1.0), &icfg).unwrap()
        };
        group.bench_with_input(BenchmarkId::new("sequential", l), &l, |b, _| b.iter(|| black_box(seq_map(&members, run))));
        group.bench_with_input(BenchmarkId::new("parallel", l), &l, |b, _| b.iter(|| black_box(par_map(&members, run))));
    }
    group.finish();
}

// Batch of nonlinear-term evaluations, the inner kernel of every step.
fn nonlinear_batch(c: &mut Criterion) {
    let m = model(21);
    let fields: Vec<ScalarSpectrum> = (0..32).map(|i| m.random_initial(3, i, 1.0, 1.0)).collect();
    let mut group = c.benchmark_group("nonlinear_b");
    group.bench_function("sequential", |b| b.iter(|| black_box(seq_map(&fields, |s| nonlinear_b(m.context(), s).unwrap()))));
    group.bench_function("parallel", |b| b.iter(|| black_box(par_map(&fields, |s| nonlinear_b(m.context(), s).unwrap()))));
    group.finish();
}

criterion_group!(benches, ensemble, nonlinear_batch);
criterion_main!(benches);
