use additive_bachelier::calib::smile_fit::evaluate;
use additive_bachelier::calib::{calibrate, synthesize, CalibConfig, SyntheticSpec};
use additive_bachelier::SmileParams;
use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};

fn bench_calibration(c: &mut Criterion) {
    let vd = NaiveDate::from_ymd_opt(2020, 4, 29).unwrap();
    let mut spec = SyntheticSpec::monthly(vd, SmileParams::new(-0.6, 1.1, 0.5).unwrap(), 2.0).unwrap();
    spec.expiries.truncate(3);
    spec.forwards.truncate(3);
    spec.spreads_bps.truncate(3);
    spec.strike_half_width = 10.0;
    let m = synthesize(&spec).unwrap();
    let cfg = CalibConfig::default();
    let r = calibrate(&m.chain, Some(&m.ois), &cfg).unwrap().result;
    let quotes: Vec<_> = r.expiries.iter().map(|e| e.quotes.clone()).collect();

    c.bench_function("objective evaluation, 3 expiries", |b| {
        b.iter(|| evaluate(&quotes, cfg.alpha, |_| (-0.5, 1.0)).unwrap().total)
    });
    let mut group = c.benchmark_group("cascade");
    group.sample_size(10);
    group.bench_function("calibrate, 3 expiries", |b| {
        b.iter(|| calibrate(&m.chain, Some(&m.ois), &cfg).unwrap().result.eta)
    });
    group.finish();
}

criterion_group!(benches, bench_calibration);
criterion_main!(benches);
