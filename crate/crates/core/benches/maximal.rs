//! Maximal operators and the RdF iteration on the active backend. Run once
//! with default features (rayon) and once with `--no-default-features`
//! (sequential); the backend name is part of every benchmark id so the two
//! result sets sit side by side in the criterion report.

use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use swl::construct::{rdf_majorant, NormSpace};
use swl::grid::GridSpec;
use swl::maximal::{maximal, MaximalConfig};
use swl::potential::{critical_radius_field, Potential};
use swl::rng::{stream, RandomField};

fn setup(n: usize) -> (GridSpec, Arc<swl::CriticalRadiusField>, swl::GridFunction) {
    let spec = GridSpec::new(2, n, 2.0).unwrap();
    let rho = Arc::new(critical_radius_field(&Potential::square_norm(spec, 1.0).unwrap()));
    let f = RandomField::draw(&mut stream(1, 1), 2, 2.0, 4).sample(spec);
    (spec, rho, f)
}

fn operators(c: &mut Criterion) {
    let backend = swl::par::backend();
    let mut g = c.benchmark_group(format!("maximal/{backend}"));
    for n in [32, 64, 128] {
        let (spec, rho, f) = setup(n);
        let cfgs = [
            ("cube", MaximalConfig::cube(rho.clone(), 1.0)),
            ("centered", MaximalConfig::centered(rho.clone(), 1.0)),
            ("dyadic", MaximalConfig::dyadic(rho.clone(), 1.0)),
            ("hardy_littlewood", MaximalConfig::hardy_littlewood(spec)),
        ];
        for (name, cfg) in &cfgs {
            g.bench_with_input(BenchmarkId::new(*name, n), &f, |b, f| b.iter(|| maximal(black_box(f), cfg).unwrap()));
        }
    }
    g.finish();
}

fn rho_field(c: &mut Criterion) {
    let backend = swl::par::backend();
    let mut g = c.benchmark_group(format!("rho/{backend}"));
    g.sample_size(10);
    for n in [32, 64] {
        let spec = GridSpec::new(2, n, 2.0).unwrap();
        let v = Potential::custom(Potential::square_norm(spec, 1.0).unwrap().values().clone()).unwrap();
        g.bench_with_input(BenchmarkId::new("custom_square_norm", n), &v, |b, v| b.iter(|| critical_radius_field(black_box(v))));
    }
    g.finish();
}

fn rdf(c: &mut Criterion) {
    let backend = swl::par::backend();
    let mut g = c.benchmark_group(format!("rdf/{backend}"));
    g.sample_size(10);
    let (_, rho, f) = setup(32);
    let cfg = MaximalConfig::cube(rho, 2.0);
    let space = NormSpace::new(2.0, None);
    g.bench_function("majorant_k40_n32", |b| b.iter(|| rdf_majorant(black_box(&f), &cfg, None, 40, 1e-9, &space).unwrap()));
    g.finish();
}

criterion_group!(benches, operators, rho_field, rdf);
criterion_main!(benches);
