use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use homctl_bench::fixture;
use homctl_core::memory::apply_h;
use homctl_core::solvers::{implicit_step_solve, solve_state, EllipticOperator};
use homctl_core::SolverOptions;

fn memory(c: &mut Criterion) {
    let p = fixture(65, 256);
    c.bench_function("apply_h 63x63x257", |b| {
        b.iter(|| apply_h(black_box(&p.forcing), 1.0, p.time.dt()).unwrap())
    });
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("implicit_step");
    for n in [33, 65, 129] {
        let p = fixture(n, 64);
        let op = EllipticOperator::new(&p.mesh, p.time.dt(), 1.0).unwrap();
        let rhs = p.forcing.slice(1).to_vec();
        group.bench_with_input(BenchmarkId::from_parameter(n), &rhs, |b, rhs| {
            b.iter(|| {
                let mut x = vec![0.0; rhs.len()];
                implicit_step_solve(&op, rhs, &mut x, 1e-10, 10_000).unwrap();
                x
            })
        });
    }
    group.finish();
}

fn state(c: &mut Criterion) {
    let p = fixture(33, 128);
    let v = p.zero_field();
    let opts = SolverOptions::default();
    c.bench_function("solve_state 31x31x128", |b| {
        b.iter(|| solve_state(black_box(&p), &v, &opts).unwrap())
    });
}

criterion_group!(benches, memory, step, state);
criterion_main!(benches);
