use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ctp_bench::{generated, intro, pipeline};
use ctp_core::dense::{discretize, zone_reach, ZoneLimits};
use ctp_core::gen::Shape;
use ctp_core::reductions::check_via_vass;
use ctp_core::semantics::reach_explicit;
use ctp_core::vass::{VassBudget, VassMode};
use ctp_core::{classify_system, parse, serialize, Limits, Network, Target};

fn front_end(c: &mut Criterion) {
    let systems = generated(Shape::Free, false, 50);
    let texts: Vec<String> = systems.iter().map(serialize).collect();
    c.bench_function("parse 50 generated", |b| {
        b.iter(|| {
            for t in &texts {
                black_box(parse(t).unwrap());
            }
        })
    });
    c.bench_function("classify 50 generated", |b| {
        b.iter(|| {
            for s in &systems {
                black_box(classify_system(s));
            }
        })
    });
}

fn explicit_vs_vass(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    for n in [2usize, 3, 4] {
        let sys = pipeline(n);
        let net = Network::new(&sys).unwrap();
        let target = net.resolve_target(&Target::Final).unwrap();
        group.bench_with_input(BenchmarkId::new("explicit", n), &n, |b, _| {
            b.iter(|| reach_explicit(&net, &target, Limits::bounded(4)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("vass", n), &n, |b, _| {
            b.iter(|| {
                check_via_vass(&sys, &Target::Final, VassMode::Auto, &VassBudget::default())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn dense_engines(c: &mut Criterion) {
    let mut group = c.benchmark_group("intro");
    for k in [1usize, 2, 3, 4] {
        let sys = intro(k);
        let net = Network::new(&sys).unwrap();
        let target = net
            .resolve_target(&Target::parse(&format!("q=q{k}")).unwrap())
            .unwrap();
        group.bench_with_input(BenchmarkId::new("zones", k), &k, |b, &k| {
            b.iter(|| zone_reach(&net, &target, ZoneLimits::bounded(k)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("discretize", k), &k, |b, _| {
            b.iter(|| discretize(&sys).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, front_end, explicit_vs_vass, dense_engines);
criterion_main!(benches);
