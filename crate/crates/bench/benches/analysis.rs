use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use qcwalk_bench::chaotic_fock;
use qcwalk_core::analysis::{lyapunov_max, scatter_one, LyapunovConfig, ScatterConfig};
use qcwalk_core::observables::{power_spectrum, TimeSeries, Window};
use qcwalk_core::presets::RunConfig;

fn drivers(c: &mut Criterion) {
    let (p, _, bloch) = chaotic_fock();
    let mut ctrl = p.controller();
    ctrl.rung_projection = true;
    let mut group = c.benchmark_group("drivers");
    group.sample_size(10);

    let cfg = LyapunovConfig { horizon: 200.0, ..LyapunovConfig::default() };
    group.bench_function("lyapunov_200", |b| b.iter(|| lyapunov_max(black_box(&bloch), &p, &cfg, &ctrl).unwrap()));

    let init = RunConfig::base().initial;
    let scatter = ScatterConfig { tau_max: 500.0, ..ScatterConfig::default() };
    group.bench_function("scatter_one_p46", |b| b.iter(|| scatter_one(&init, black_box(46.3), &p, &scatter, &ctrl).unwrap()));
    group.finish();

    // purity-length series from a 1000-unit run at dt = 0.1
    let values: Vec<f64> = (0..10_001).map(|i| 0.75 + 0.25 * (0.3 * i as f64).cos() * (0.011 * i as f64).sin()).collect();
    let series = TimeSeries::new(0.0, 0.1, values).unwrap();
    c.bench_function("power_spectrum_10001", |b| b.iter(|| power_spectrum(black_box(&series), Window::Hann).unwrap()));
}

criterion_group!(benches, drivers);
criterion_main!(benches);
