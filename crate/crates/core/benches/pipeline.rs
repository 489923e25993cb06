use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nstload::features::{build_features, Subscale};
use nstload::regress::{build_report, stepwise_fit, CandidateMode};
use nstload::synth::{simulate_study, StudyConfig};
use nstload::{Config, Exec};

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn features(c: &mut Criterion) {
    let study = simulate_study(
        &StudyConfig {
            n_subjects: 100,
            tasks_per_subject: 4,
            ..StudyConfig::default()
        },
        1,
        Exec::default(),
    )
    .unwrap();
    let cfg = Config::default();
    let mut group = c.benchmark_group("build_features_400_sessions");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_features(black_box(&study.records), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn report(c: &mut Criterion) {
    let cfg = Config::default();
    let table = simulate_study(&StudyConfig::default(), 1, Exec::default())
        .unwrap()
        .feature_table(&cfg, Exec::default())
        .unwrap();
    let mut group = c.benchmark_group("build_report_14_rows");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| build_report(black_box(&table), &cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn recovery_sweep(c: &mut Criterion) {
    let cfg = Config::default();
    let seeds: Vec<u64> = (0..32).collect();
    let mut group = c.benchmark_group("recovery_sweep_32_seeds");
    group.sample_size(20);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                exec.map(&seeds, |&seed| {
                    let table = simulate_study(&StudyConfig::default(), seed, Exec::Sequential)
                        .and_then(|s| s.feature_table(&cfg, Exec::Sequential))
                        .unwrap();
                    stepwise_fit(
                        &table,
                        Subscale::MentalDemand,
                        CandidateMode::BiometricFull,
                        &cfg,
                    )
                    .unwrap()
                    .adj_r2
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, features, report, recovery_sweep);
criterion_main!(benches);
