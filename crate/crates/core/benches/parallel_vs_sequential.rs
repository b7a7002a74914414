//! Parallel versus sequential execution of the batch workloads: Poincaré
//! sampling, De Giorgi level energies and a three-level parameter sweep.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use nslab_core::config::RunConfig;
use nslab_core::continuation::{parameter_sweep, SweepParam};
use nslab_core::degiorgi::{verify_recursion, DeGiorgiConfig};
use nslab_core::diagnostics::{poincare_batch, PoincareHypotheses};
use nslab_core::discretization::Grid;
use nslab_core::exec::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

const RUN: &str = "[grid]\ncells = [128]\n[time]\nhorizon = 0.25\ndt = 1e-3\nsnapshot_every = 5\n\
                   [initial]\npreset = \"gaussian-bump\"\nrho_amp = 0.3\ntheta_amp = -0.5\ntheta_lower = 0.5\nvelocity_amp = 0.5\n";

fn poincare(c: &mut Criterion) {
    let g = Grid::new_2d(32, 32, 1.0, 1.0).unwrap();
    let hyp = PoincareHypotheses {
        m1: 0.5,
        m2: 10.0,
        gamma: 2.0,
    };
    let mut group = c.benchmark_group("poincare_batch_256");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(poincare_batch(&g, &hyp, 256, 0, exec).unwrap()))
        });
    }
    group.finish();
}

fn degiorgi(c: &mut Criterion) {
    let cfg = RunConfig::parse(RUN).unwrap();
    let (traj, _) = nslab_core::artifacts::run_trajectory(&cfg).unwrap();
    let dg = DeGiorgiConfig {
        m: 3.0,
        ..DeGiorgiConfig::default()
    };
    let mut group = c.benchmark_group("degiorgi_levels_30");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(verify_recursion(&traj, &dg, exec).unwrap()))
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let base = RunConfig::parse(RUN).unwrap().sweep_base().unwrap();
    let mut group = c.benchmark_group("eta_sweep_3_levels");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(parameter_sweep(&base, SweepParam::Eta, &[1e-1, 1e-2, 1e-3], exec).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, poincare, degiorgi, sweep);
criterion_main!(benches);
