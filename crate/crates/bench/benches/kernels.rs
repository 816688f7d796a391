use criterion::{criterion_group, criterion_main, Criterion};
use mbsde::bsde::{assemble_bsde_sample, path_seed, sample_brownian};
use mbsde::geometry::{FlatTorus, Sphere};
use mbsde::pde::{initialize_from_map, solve_intrinsic_m1, step_penalized, InitialMap, Scheme, SolverOptions, TorusGrid};
use mbsde::{Generator, ManifoldOps};
use std::hint::black_box;

fn penalized_step(c: &mut Criterion) {
    let s2 = Sphere::new(3);
    let bubble = InitialMap::Bubble { radius: 0.3 };
    let state = initialize_from_map(|x| bubble.evaluate(&s2, x), TorusGrid::new(2, 64).unwrap(), &s2).unwrap();
    let gen = Generator::shear(0.5);
    c.bench_function("step_penalized 64x64 sphere2", |b| {
        b.iter(|| step_penalized(black_box(&state), 1e-3, 5e-5, &gen, &s2, Scheme::Imex).unwrap())
    });
}

fn bsde_assembly(c: &mut Criterion) {
    let s2 = Sphere::new(3);
    let circle = InitialMap::GreatCircle { k: 1 };
    let init = initialize_from_map(|x| circle.evaluate(&s2, x), TorusGrid::new(1, 128).unwrap(), &s2).unwrap();
    let opts = SolverOptions { record_stride: 4, ..SolverOptions::default() };
    let traj = solve_intrinsic_m1(&init, 0.25, 2.5e-5, &Generator::zero(), &s2, &opts).unwrap();
    let field = traj.interpolator();
    let path = sample_brownian(path_seed(1, 0), 1e-4, 0.25, 1).unwrap();
    let h = |x: &[f64]| circle.evaluate(&s2, x);
    c.bench_function("assemble_bsde_sample 2500 steps", |b| {
        b.iter(|| assemble_bsde_sample(&field, black_box(&path), &[0.0], &h).unwrap())
    });
}

fn extended_sff(c: &mut Criterion) {
    let s2 = Sphere::new(3);
    let t2 = FlatTorus::new();
    let p3 = [0.3, 0.8, 0.6];
    let u3 = [0.2, -0.1, 0.4];
    let p4 = [1.1, 0.1, 0.2, 0.95];
    let u4 = [0.2, -0.1, 0.4, 0.3];
    c.bench_function("extended_sff sphere2", |b| b.iter(|| s2.extended_sff(black_box(&p3), black_box(&u3))));
    c.bench_function("extended_sff torus2", |b| b.iter(|| t2.extended_sff(black_box(&p4), black_box(&u4))));
}

criterion_group!(benches, penalized_step, bsde_assembly, extended_sff);
criterion_main!(benches);
