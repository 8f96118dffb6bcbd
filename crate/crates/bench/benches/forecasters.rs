use criterion::{black_box, criterion_group, criterion_main, Criterion};
use growthcast::forecasters::{self, AnnGrid, LstmGrid, OptimizerKind, SvrGrid};
use growthcast_bench::trend;

fn bench_forecasters(c: &mut Criterion) {
    let series = trend(110, 1);
    let (train, val) = series.split_at(90);
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("holt", |b| b.iter(|| forecasters::holt_fit(black_box(train)).unwrap()));
    group.bench_function("auto_arima", |b| b.iter(|| forecasters::auto_arima(black_box(train)).unwrap()));
    group.bench_function("svr_default_grid", |b| {
        b.iter(|| forecasters::svr_fit(black_box(train), &SvrGrid::default(), val).unwrap())
    });
    let ann = AnnGrid { lag: vec![5], hidden: vec![4], ..Default::default() };
    group.bench_function("ann_one_candidate", |b| b.iter(|| forecasters::ann_fit(black_box(train), &ann, val, 5, 7).unwrap()));
    let lstm = LstmGrid { lag: vec![5], hidden: vec![4], epochs: vec![50], optimizer: vec![OptimizerKind::Adam], ..Default::default() };
    group.bench_function("lstm_one_candidate", |b| b.iter(|| forecasters::lstm_fit(black_box(train), &lstm, val, 1, 7).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_forecasters);
criterion_main!(benches);
