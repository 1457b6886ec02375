use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use whichway::elements::run_train;
use whichway::metrics::sample_photons_with;
use whichway::propagation::GuardBand;
use whichway::scenarios::Numerics;
use whichway::{
    create_plane_wave, Complex64, ExperimentGeometry, Exec, Field, GridSpec, Propagator,
    PropagatorConfig, TrainSetup,
};

fn propagator(exec: Exec) -> Propagator {
    Propagator::new(PropagatorConfig {
        guard: GuardBand { fraction: 0.1 },
        exec,
        ..PropagatorConfig::default()
    })
}

fn hop(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate_hop");
    group.sample_size(10);
    for n in [512usize, 1024, 2048] {
        let grid = GridSpec::square(n, 2.5e-6, 650e-9).unwrap();
        let w = 0.1 * grid.width();
        let u = Field::from_fn(grid, 0.0, |x, y| Complex64::new((-(x * x + y * y) / (w * w)).exp(), 0.0)).unwrap();
        for exec in [Exec::Sequential, Exec::Parallel] {
            let prop = propagator(exec);
            // warm the plan cache so only the hop is timed
            prop.propagate(&u, 1e-3).unwrap();
            group.bench_with_input(BenchmarkId::new(format!("{exec:?}"), n), &u, |b, u| {
                b.iter(|| prop.propagate(u, 1e-3).unwrap())
            });
        }
    }
    group.finish();
}

fn train(c: &mut Criterion) {
    let mut group = c.benchmark_group("focal_plane_train");
    group.sample_size(10);
    let g = ExperimentGeometry::default();
    for exec in [Exec::Sequential, Exec::Parallel] {
        let mut numerics = Numerics::new(&g, 1024, 10e-6, false).unwrap();
        numerics.exec = exec;
        let prop = numerics.propagator();
        let src = create_plane_wave(numerics.grid, Complex64::new(1.0, 0.0)).unwrap();
        let t = g.train(&TrainSetup::default());
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| run_train(&prop, &src, &t, g.sigma1_z).unwrap())
        });
    }
    group.finish();
}

fn photons(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_photons");
    group.sample_size(10);
    let grid = GridSpec::square(512, 2.5e-6, 650e-9).unwrap();
    let map = Field::from_fn(grid, 0.0, |x, _| Complex64::new((x * 1e5).cos(), 0.0))
        .unwrap()
        .intensity();
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_function(format!("{exec:?}"), |b| {
            b.iter(|| sample_photons_with(&map, 1_000_000, 1, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, hop, train, photons);
criterion_main!(benches);
