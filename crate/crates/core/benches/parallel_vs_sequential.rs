use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qcorr::search::minimize_on_sphere;
use qcorr::spinchain::{parity_crossings, SpinChainSpec};
use qcorr::sweep::{run_sweep, ChainTemplate, Measure, SweepAxis, SweepConfig, SweepVariable};
use qcorr::{Execution, SearchConfig};

fn sweep_config() -> SweepConfig {
    SweepConfig {
        chain: ChainTemplate { n: 8, jx: 1.0, chi: 0.5 },
        sweep: SweepAxis {
            variable: SweepVariable::Hz,
            from: 0.0,
            to: 1.25,
            points: 16,
        },
        fixed: None,
        separations: vec![1, 2],
        measures: vec![Measure::D, Measure::I2],
        search: SearchConfig { grid_theta: 20, grid_phi: 40, ..SearchConfig::default() },
        output: None,
    }
}

fn bench(c: &mut Criterion) {
    let modes = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

    let mut g = c.benchmark_group("sweep_n8_16pts");
    g.sample_size(10);
    let cfg = sweep_config();
    for (name, mode) in modes {
        g.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &m| b.iter(|| run_sweep(&cfg, m).unwrap()));
    }
    g.finish();

    let mut g = c.benchmark_group("sphere_grid_1deg");
    g.sample_size(10);
    let a = nalgebra::Matrix3::new(2.0, 0.3, -0.1, 0.3, 1.5, 0.2, -0.1, 0.2, 0.7);
    for (name, mode) in modes {
        let cfg = SearchConfig::fine().with_execution(mode);
        g.bench_function(name, |b| b.iter(|| minimize_on_sphere(|k| k.dot(&(a * k)), &cfg)));
    }
    g.finish();

    let mut g = c.benchmark_group("parity_crossings_n8");
    g.sample_size(10);
    let spec = SpinChainSpec::transverse(8, 1.0, 0.5, 0.0).unwrap();
    for (name, mode) in modes {
        g.bench_function(name, |b| b.iter(|| parity_crossings(&spec, 0.75, 200, 1e-8, mode).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
