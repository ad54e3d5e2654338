//! Criterion benchmarks for the hot paths: the gadget noise map, the exact
//! and oracle distillation rounds, demand-driven table growth, and the
//! rotation compiler.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ydistill_core::codes::{build_code, build_gamma};
use ydistill_core::distill::{distill_round_exact, distill_round_oracle};
use ydistill_core::noise::NoiseParams;
use ydistill_core::schedule::{ScheduleConfig, TableBuilder};
use ydistill_core::synth::{adaptive_execute, compile_rotation, SeededOutcomes};

fn bench_build_gamma(c: &mut Criterion) {
    let code = build_code(1).unwrap();
    c.bench_function("build_gamma", |b| {
        b.iter(|| build_gamma(black_box(1e-3), &code).unwrap())
    });
}

fn bench_distill_round(c: &mut Criterion) {
    let input = NoiseParams::diagonal(1e-2).unwrap();
    let res = [NoiseParams::diagonal(1e-3).unwrap()];
    c.bench_function("distill_round_exact_k4", |b| {
        b.iter(|| distill_round_exact(4, black_box(&input), 1e-3, &res).unwrap())
    });
    c.bench_function("distill_round_oracle_k4", |b| {
        b.iter(|| distill_round_oracle(4, black_box(&input), 1e-3, &res).unwrap())
    });
}

fn bench_cost_table(c: &mut Criterion) {
    c.bench_function("cost_table_k4_1e-8", |b| {
        b.iter(|| {
            let mut builder = TableBuilder::new(ScheduleConfig::default()).unwrap();
            builder.ensure(black_box(4), 1e-8).unwrap()
        })
    });
}

fn bench_compile_rotation(c: &mut Criterion) {
    c.bench_function("compile_rotation", |b| {
        b.iter(|| compile_rotation([0.6, 0.64, 0.48], black_box(0.21), 1e-6).unwrap())
    });
    let compiled = compile_rotation([0.0, 1.0, 0.0], 0.21, 1e-6).unwrap();
    c.bench_function("adaptive_execute_l13", |b| {
        let mut seed = 0u64;
        b.iter(|| {
            seed += 1;
            let mut src = SeededOutcomes::new(seed);
            adaptive_execute(&compiled.per_angle[1].expansion, &mut src)
        })
    });
}

criterion_group!(
    benches,
    bench_build_gamma,
    bench_distill_round,
    bench_cost_table,
    bench_compile_rotation
);
criterion_main!(benches);
