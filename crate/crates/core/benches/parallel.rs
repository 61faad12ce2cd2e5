//! Sequential against rayon execution for the three data-parallel kernels:
//! the probe scan, the ageing sweep and the Monte Carlo oracle.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use stochord::ageing::{classify_ageing, AgeingConfig};
use stochord::mc::{mc_iterated_tail_table, McConfig};
use stochord::ordering::{v_s_scan, ProbeGridConfig};
use stochord::{DistributionSpec, Execution, IteratedTailEvaluator};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn probe_scan(c: &mut Criterion) {
    let x = IteratedTailEvaluator::new(DistributionSpec::gamma(3.0, 1.0).unwrap(), 2).unwrap();
    let y = IteratedTailEvaluator::new(DistributionSpec::gamma(2.0, 1.0).unwrap(), 2).unwrap();
    let mut group = c.benchmark_group("v_s_scan");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ProbeGridConfig {
            n_a: 9,
            n_b: 11,
            points_per_side: 256,
            ..Default::default()
        }
        .with_execution(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| v_s_scan(&x, &y, &cfg).unwrap()));
    }
    group.finish();
}

fn ageing_sweep(c: &mut Criterion) {
    let ev = IteratedTailEvaluator::new(DistributionSpec::gamma(0.5, 1.0).unwrap(), 3).unwrap();
    let mut group = c.benchmark_group("classify_ageing");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = AgeingConfig::default().with_execution(exec);
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| classify_ageing(&ev, &cfg).unwrap()));
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let spec = DistributionSpec::weibull(0.7, 1.0).unwrap();
    let xs: Vec<f64> = (1..=20).map(|i| 0.2 * i as f64).collect();
    let mut group = c.benchmark_group("mc_iterated_tail_table");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = McConfig {
            execution: exec,
            ..McConfig::default().with_samples(200_000)
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| mc_iterated_tail_table(&spec, &[1, 2, 3, 4], &xs, &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, probe_scan, ageing_sweep, monte_carlo);
criterion_main!(benches);
