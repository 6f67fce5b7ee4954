use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use knowledge_core::funding::{researcher_with_rewards, FundingParams, FundingScheme, RewardTech};
use knowledge_core::moonshot::{chain_npv, FirstChoice, NpvMode};
use knowledge_core::researcher::{opt_deepen, opt_expand};
use knowledge_core::specfun::{erf_inv, lambert_w0};
use knowledge_core::{EconomyParams, KnowledgeSet};

fn special_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("specfun");
    g.bench_function("erf_inv", |b| b.iter(|| erf_inv(black_box(0.731)).unwrap()));
    g.bench_function("erf_inv_tail", |b| b.iter(|| erf_inv(black_box(0.999_999)).unwrap()));
    g.bench_function("lambert_w0", |b| b.iter(|| lambert_w0(black_box(2.7)).unwrap()));
    g.finish();
}

fn researcher(c: &mut Criterion) {
    let p = EconomyParams::new(1.0, 1.0).unwrap();
    let mut g = c.benchmark_group("researcher");
    g.bench_function("opt_expand", |b| b.iter(|| opt_expand(black_box(&p)).unwrap()));
    g.bench_function("opt_deepen_6q", |b| b.iter(|| opt_deepen(black_box(6.0), &p).unwrap()));
    g.bench_function("opt_deepen_12q", |b| b.iter(|| opt_deepen(black_box(12.0), &p).unwrap()));
    g.finish();
}

fn moonshot(c: &mut Criterion) {
    let p = EconomyParams::new(1.0, 1.0).unwrap();
    let f1 = KnowledgeSet::single(0.0, 0.0).unwrap();
    let mut g = c.benchmark_group("moonshot");
    for x in [6.0, 9.0] {
        g.bench_function(format!("chain_npv_{x}q"), |b| {
            b.iter(|| chain_npv(&f1, FirstChoice::guaranteed(black_box(x)), &p, 0.9, NpvMode::ConsistentFoc).unwrap())
        });
    }
    g.finish();
}

fn funding(c: &mut Criterion) {
    let fp = FundingParams::new(3.0, 16.0, 6.0, 1.0, RewardTech::PiecewiseLinear).unwrap();
    let sc = FundingScheme { zeta: 2.0, h: 0.0, eta: 0.8 };
    c.bench_function("funding/researcher_with_rewards", |b| {
        b.iter(|| researcher_with_rewards(black_box(&sc), &fp, 1.0).unwrap())
    });
}

criterion_group!(benches, special_functions, researcher, moonshot, funding);
criterion_main!(benches);
