use criterion::{criterion_group, criterion_main, Criterion};
use iwasawa_bench::{chi12, ring_5_12, unit_series};
use iwasawa_core::coleman::coleman_operator;
use iwasawa_core::cyclofield::FiniteOrderCharacter;
use iwasawa_core::lfunctions::DeligneRibetMeasure;
use iwasawa_core::suites::class_number_ratio;

fn stickelberger(c: &mut Criterion) {
    let (chi, ring) = (chi12(), ring_5_12());
    let mut g = c.benchmark_group("stickelberger");
    g.sample_size(10);
    for m in [2u32, 4] {
        g.bench_function(format!("build m={m}"), |b| {
            b.iter(|| DeligneRibetMeasure::new(&chi, &ring, m, None).unwrap())
        });
    }
    let dr = DeligneRibetMeasure::new(&chi, &ring, 4, None).unwrap();
    let eta = FiniteOrderCharacter::new(5, 2, 1).unwrap();
    g.bench_function("eval eta kappa^2 m=4", |b| b.iter(|| dr.eval(&eta, 2).unwrap()));
    g.finish();
}

fn coleman(c: &mut Criterion) {
    let f = unit_series(27, 1);
    c.bench_function("coleman operator N=27", |b| b.iter(|| coleman_operator(&f).unwrap()));
}

fn class_number(c: &mut Criterion) {
    let mut g = c.benchmark_group("class number ratio");
    g.sample_size(10);
    for bits in [128u32, 256] {
        g.bench_function(format!("mod12 {bits} bits"), |b| {
            b.iter(|| class_number_ratio("mod12_quadratic", bits).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, stickelberger, coleman, class_number);
criterion_main!(benches);
