use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use segstokes_core::exec::Execution;
use segstokes_core::mobility::{assemble, filament_velocity, FilamentMesh, Method};
use segstokes_core::planar::{
    planar_velocities, Domain, Integrator, PlanarFlagellumState, StepConfig, Stiffness, TargetCurvature,
};
use segstokes_core::rod::{rod_velocities, DimensionalRod, RodState, RodStepConfig};
use segstokes_core::{FluidParam, RegParam, Vec3};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn mobility(c: &mut Criterion) {
    let eps = RegParam::new(0.01).unwrap();
    let mu = FluidParam::new(1.0).unwrap();
    let mut group = c.benchmark_group("assemble");
    for n in [48, 96] {
        let mesh = FilamentMesh::straight(n, 1.0).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &mesh, |b, m| {
                b.iter(|| assemble(m, m.nodes(), eps, mu, Method::Segments, exec))
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("check_set_velocity");
    let mesh = FilamentMesh::straight(48, 1.0).unwrap();
    let forces = vec![Vec3::y(); 48];
    let points: Vec<Vec3> = mesh.check_points(1505).into_iter().map(|(_, p)| p).collect();
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| filament_velocity(&mesh, black_box(&forces), &points, eps, mu, Method::Segments, exec))
        });
    }
    group.finish();
}

fn swimmers(c: &mut Criterion) {
    let wave = TargetCurvature::new(0.075, 9.0 * PI / 4.0, 2.0 * PI, 0.0).unwrap();
    let stiff = Stiffness {
        tensile: 2.95,
        bending: 0.0221,
    };
    let planar = PlanarFlagellumState::initial(24, 1.0, Vec3::zeros(), stiff, wave).unwrap();
    let rod_params = DimensionalRod {
        bend: 4.9587,
        shear: 0.8264,
        amplitude: 3.5,
        wavenumber: 9.0 * PI / 160.0,
        frequency: 550.0,
        length: 40.0,
        viscosity: 1e-6,
    }
    .nondimensionalize()
    .unwrap();
    let rod = RodState::initial(20, Vec3::zeros(), rod_params).unwrap();

    let mut group = c.benchmark_group("swimmer_velocity");
    for (name, exec) in MODES {
        let cfg = StepConfig {
            dt: 1e-5,
            eps: RegParam::new(0.01).unwrap(),
            mu: FluidParam::new(1.0).unwrap(),
            integrator: Integrator::Euler,
            domain: Domain::Free,
            max_speed: 1e3,
            exec,
        };
        group.bench_function(BenchmarkId::new("planar", name), |b| {
            b.iter(|| planar_velocities(black_box(&planar), &cfg))
        });
        let rcfg = RodStepConfig {
            dt: 5e-6,
            eps: RegParam::new(0.005).unwrap(),
            mu: FluidParam::new(1.0).unwrap(),
            integrator: Integrator::Euler,
            max_speed: 1e3,
            exec,
        };
        group.bench_function(BenchmarkId::new("rod", name), |b| {
            b.iter(|| rod_velocities(black_box(&rod), (0.0, 0.0), &rcfg))
        });
    }
    group.finish();
}

criterion_group!(benches, mobility, swimmers);
criterion_main!(benches);
