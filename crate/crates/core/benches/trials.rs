use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use holo_secrecy::experiments::{run_snr_sweep, PaMode, ScenarioConfig};
use holo_secrecy::parallel::ExecMode;

fn snr_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("snr_sweep");
    group.sample_size(10);
    for trials in [8, 32] {
        for mode in [ExecMode::Parallel, ExecMode::Sequential] {
            let cfg = ScenarioConfig {
                trials,
                snr_db: vec![0.0, 10.0, 20.0],
                pa: PaMode::Both,
                exec: mode,
                ..ScenarioConfig::default()
            };
            let label = format!("{mode:?}").to_lowercase();
            group.bench_with_input(BenchmarkId::new(label, trials), &cfg, |b, cfg| {
                b.iter(|| run_snr_sweep(cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, snr_sweep);
criterion_main!(benches);
