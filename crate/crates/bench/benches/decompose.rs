use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nearshift::neardecomp::example_type_subspace;
use nearshift::operators::mult_operator;
use nearshift::wold::{wold_decompose_auto, NormSpec};
use nearshift::{Ambient, Factorizer, FiniteBlaschke, Lcg64, TruncatedSeries, C64};

fn blaschke() -> FiniteBlaschke {
    FiniteBlaschke::new(1, vec![C64::new(0.4, 0.2), C64::new(-0.3, 0.5)], true).unwrap()
}

fn random_series(degree: usize, seed: u64) -> TruncatedSeries {
    let mut g = Lcg64::new(seed);
    TruncatedSeries::new((0..=degree).map(|_| g.complex()).collect()).unwrap()
}

fn wold(c: &mut Criterion) {
    let b = blaschke();
    let mut group = c.benchmark_group("wold_decompose");
    for degree in [32, 128, 512] {
        let f = random_series(degree, 1);
        group.bench_with_input(BenchmarkId::from_parameter(degree), &f, |bench, f| {
            bench.iter(|| wold_decompose_auto(black_box(f), &b).unwrap())
        });
    }
    group.finish();
}

fn multiplication(c: &mut Criterion) {
    let b = blaschke();
    let mut group = c.benchmark_group("mult_operator");
    for degree in [32, 128] {
        let amb = Ambient::h2(degree);
        group.bench_with_input(BenchmarkId::from_parameter(degree), &amb, |bench, amb| {
            bench.iter(|| mult_operator(&b, black_box(amb)).unwrap())
        });
    }
    group.finish();
}

fn factorizer(c: &mut Criterion) {
    let b = FiniteBlaschke::z_power(2).unwrap();
    let ex = example_type_subspace(&b, C64::new(0.5, 0.0), 1, 8, NormSpec::h2()).unwrap();
    c.bench_function("factorizer_alpha_pos", |bench| {
        bench.iter(|| Factorizer::alpha_pos(black_box(&ex.subspace), &b, 0.5).unwrap())
    });
}

criterion_group!(benches, wold, multiplication, factorizer);
criterion_main!(benches);
