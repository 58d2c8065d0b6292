use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stcsp::benchgen::{gen_grid, gen_mc, GridParams, McParams, Variant};
use stcsp::unroll::increment_until_sat;
use stcsp::{compile, normalize, parse, SolveOptions, StCsp, Strategy};

fn mc(n: u32, b: u32, variant: Variant) -> StCsp {
    parse(&gen_mc(&McParams { n, b, variant })).unwrap()
}

fn missionaries(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_until");
    for (n, b) in [(3, 2), (4, 3), (6, 4), (8, 4)] {
        let p = mc(n, b, Variant::Until);
        g.bench_with_input(BenchmarkId::from_parameter(format!("{n}_{b}")), &p, |bench, p| {
            bench.iter(|| compile(p, &SolveOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn at_vs_first_next(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_3_2_goal_time");
    g.sample_size(10);
    for t in [11, 13] {
        for (name, variant) in [("at", Variant::At(t)), ("first_next", Variant::FirstNext(t))] {
            let p = mc(3, 2, variant);
            g.bench_with_input(BenchmarkId::new(name, t), &p, |bench, p| {
                bench.iter(|| compile(p, &SolveOptions::default()).unwrap())
            });
        }
    }
    g.finish();
}

fn grid(c: &mut Criterion) {
    let mut g = c.benchmark_group("grid_until");
    for n in [3, 5, 8] {
        let p = parse(&gen_grid(&GridParams::corners(n, 0.7, 1, Variant::Until))).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |bench, p| {
            bench.iter(|| compile(p, &SolveOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn normalization(c: &mut Criterion) {
    let p = mc(6, 4, Variant::Until);
    c.bench_function("normalize_mc_6_4", |bench| {
        bench.iter(|| normalize(&p, Strategy::InnermostLeftmost))
    });
}

fn unroller(c: &mut Criterion) {
    let mut g = c.benchmark_group("unroll_increment");
    g.sample_size(10);
    let p = mc(3, 2, Variant::Until);
    g.bench_function("mc_3_2", |bench| bench.iter(|| increment_until_sat(&p, 12, None)));
    g.finish();
}

criterion_group!(benches, missionaries, at_vs_first_next, grid, normalization, unroller);
criterion_main!(benches);
