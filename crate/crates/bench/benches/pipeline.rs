use criterion::{black_box, criterion_group, criterion_main, Criterion};
use holdim::cover::{build_greedy_cover, build_structured_cover, CoverScale};
use holdim::dimension::{box_dimension, fastgap_certificate, triadic_scales};
use holdim::metric::{build_product_grid, CantorSpec};
use holdim::schedule::exact_schedule;
use holdim::verify::{verify_construction, Precision, VerifyConfig};
use holdim_bench::{cantor, exact_run, params, relaxed_run, six_points};

fn schedules(c: &mut Criterion) {
    c.bench_function("exact_schedule_50", |b| b.iter(|| exact_schedule(black_box(&params()), 50).unwrap()));
}

fn covers(c: &mut Criterion) {
    let s = cantor(8);
    c.bench_function("structured_cover_cantor8", |b| b.iter(|| build_structured_cover(&s, CoverScale::Level(4), 0.5).unwrap()));
    c.bench_function("greedy_cover_cantor8", |b| b.iter(|| build_greedy_cover(&s, 1.0 / 81.0, 0.5).unwrap()));
}

fn construction(c: &mut Criterion) {
    let s = cantor(5);
    c.bench_function("relaxed_run_cantor5", |b| b.iter(|| relaxed_run(&s, 3)));
    let six = six_points();
    c.bench_function("exact_run_six", |b| b.iter(|| exact_run(&six)));
}

fn verification(c: &mut Criterion) {
    let s = cantor(5);
    let run = relaxed_run(&s, 3);
    c.bench_function("verify_relaxed_cantor5", |b| b.iter(|| verify_construction(&s, &run, &VerifyConfig::default()).unwrap()));
    let six = six_points();
    let exact = exact_run(&six);
    let rational = VerifyConfig { lemmas: None, precision: Precision::Rational };
    c.bench_function("verify_exact_six_rational", |b| b.iter(|| verify_construction(&six, &exact, &rational).unwrap()));
}

fn dimension(c: &mut Criterion) {
    let s = cantor(10);
    c.bench_function("box_dimension_cantor10", |b| b.iter(|| box_dimension(&s, &triadic_scales(1..=8)).unwrap()));
    let grid = build_product_grid(&CantorSpec::middle_third(5), 1, 243).unwrap();
    c.bench_function("box_dimension_cantor_x_interval", |b| b.iter(|| box_dimension(&grid, &triadic_scales(1..=4)).unwrap()));
    c.bench_function("fastgap_certificate", |b| b.iter(|| fastgap_certificate(8, 2.0, 0.5, 4.0).unwrap()));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = schedules, covers, construction, verification, dimension
}
criterion_main!(benches);
