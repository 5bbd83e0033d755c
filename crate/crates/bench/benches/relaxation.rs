use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use cpop_bench::small_workloads;
use cpop_core::extract::{analyze, solution_moments};
use cpop_core::relax::build_relaxation;
use cpop_core::sdp::{solve, SdpOptions};

fn assemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    for w in small_workloads() {
        group.bench_with_input(BenchmarkId::from_parameter(w.name), &w, |b, w| {
            b.iter(|| build_relaxation(black_box(&w.instance), w.order, w.hierarchy).unwrap())
        });
    }
    group.finish();
}

fn solve_small(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for w in small_workloads() {
        let prog = build_relaxation(&w.instance, w.order, w.hierarchy).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(w.name), &prog, |b, prog| {
            b.iter(|| solve(black_box(prog), &SdpOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn extract(c: &mut Criterion) {
    let mut group = c.benchmark_group("extract");
    for w in small_workloads().into_iter().filter(|w| w.hierarchy != cpop_core::Hierarchy::Rpop) {
        let prog = build_relaxation(&w.instance, w.order, w.hierarchy).unwrap();
        let sol = solve(&prog, &SdpOptions::default()).unwrap();
        let y = solution_moments(&prog, &sol);
        let opt = sol.dual_objective;
        group.bench_function(w.name, |b| b.iter(|| analyze(&w.instance, black_box(&y), w.order, opt)));
    }
    group.finish();
}

criterion_group!(benches, assemble, solve_small, extract);
criterion_main!(benches);
