use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qkrate::protocols::{b92_keyrate, b92_symmetric, optpi_optimize_gram, sqkd_symmetric, SqkdSolver};
use qkrate::tables::table1;
use qkrate::{GramEstimates, PsiMode, Scenario, TwoWayGram};
use qkrate_bench::random_inputs;

fn b92(c: &mut Criterion) {
    c.bench_function("b92_symmetric_psi3", |b| b.iter(|| b92_symmetric(black_box(0.05), 0.342, PsiMode::Psi3)));
    c.bench_function("b92_symmetric_psi4", |b| b.iter(|| b92_symmetric(black_box(0.05), 0.342, PsiMode::Psi4)));
    let (gram, stats) = random_inputs(1, PsiMode::Psi3);
    c.bench_function("b92_random_psi3", |b| b.iter(|| b92_keyrate(black_box(&gram), &stats, 0.342)));
}

fn sqkd(c: &mut Criterion) {
    let g = TwoWayGram::symmetric(0.07, Scenario::Independent.qa(0.07)).unwrap();
    c.bench_function("sqkd_dual", |b| b.iter(|| qkrate::protocols::sqkd_keyrate_with(black_box(&g), SqkdSolver::Dual)));
    let mut group = c.benchmark_group("slow");
    group.sample_size(10);
    group.bench_function("sqkd_grid", |b| {
        b.iter(|| qkrate::protocols::sqkd_keyrate_with(black_box(&g), SqkdSolver::GridSimplex))
    });
    group.bench_function("sqkd_symmetric", |b| b.iter(|| sqkd_symmetric(black_box(0.07), Scenario::Correlated)));
    group.bench_function("table1", |b| b.iter(table1));
    let g = GramEstimates::depolarizing(PsiMode::Psi4, 0.07).unwrap();
    group.bench_function("optpi_optimize_1000", |b| b.iter(|| optpi_optimize_gram(black_box(&g), 1000, 0)));
    group.finish();
}

criterion_group!(benches, b92, sqkd);
criterion_main!(benches);
