use std::f64::consts::FRAC_PI_2;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dqc1_metrology::correlations::discord_control_report;
use dqc1_metrology::estimator::{crb_benchmark, BenchmarkSettings};
use dqc1_metrology::harness::{crosscheck_with, discord_scan, fisher_scan_with};
use dqc1_metrology::oracle::evolve_protocol;
use dqc1_metrology::{Execution, ModelConfig};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn benchmark_ensemble(c: &mut Criterion) {
    let cfg = ModelConfig::mixed(4);
    let settings = BenchmarkSettings { total_shots: 400, trials: 16, ..BenchmarkSettings::default() };
    let mut group = c.benchmark_group("crb_benchmark");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| crb_benchmark(&cfg, 0.5, &settings, 1, exec).unwrap())
        });
    }
    group.finish();
}

fn discord(c: &mut Criterion) {
    let cfg = ModelConfig::new(0, 1, 2, 0.5).unwrap();
    let trace = evolve_protocol(&cfg, 0.4, 0.7).unwrap();
    let mut group = c.benchmark_group("discord_control");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| discord_control_report(trace.output(), exec).unwrap())
        });
    }
    group.finish();

    let omegas: Vec<f64> = (0..8).map(|k| -0.8 + 0.2 * k as f64).collect();
    let mut group = c.benchmark_group("discord_scan");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| discord_scan(&cfg, 0.4, &omegas, exec).unwrap())
        });
    }
    group.finish();
}

fn scans(c: &mut Criterion) {
    let cfg = ModelConfig::new(2, 11, 48, 0.49).unwrap();
    let mut group = c.benchmark_group("fisher_scan");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| fisher_scan_with(&cfg, -FRAC_PI_2, FRAC_PI_2, 10_001, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("crosscheck");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| crosscheck_with(6, 0, 40, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, benchmark_ensemble, discord, scans);
criterion_main!(benches);
