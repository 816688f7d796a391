use mbsde::bsde::{assemble_bsde_sample, path_seed, sample_brownian};
use mbsde::experiment::{benchmark, run_experiment, ExperimentConfig, RunReport};
use mbsde::geometry::Sphere;
use mbsde::pde::{initialize_from_map, solve_intrinsic_m1, InitialMap, SolverOptions, TorusGrid};
use mbsde::{AmbientVector, Error, Generator};

fn constant_config() -> ExperimentConfig {
    benchmark("constant").unwrap()
}

#[test]
fn constant_terminal_value_has_no_defects() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&constant_config(), dir.path()).unwrap();
    assert!(report.passed());
    let ens = report.ensemble.as_ref().unwrap();
    assert_eq!(ens.max_residual, 0.0);
    assert_eq!(ens.max_terminal_residual, 0.0);
    assert_eq!(ens.max_tangency_defect, 0.0);
    for f in &report.flows {
        assert_eq!(f.max_dist, 0.0);
    }
    for name in ["report.json", "monitor.csv", "ensemble.csv", "scan.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let reloaded = RunReport::load(&dir.path().join("report.json")).unwrap();
    assert_eq!(reloaded.config_hash, report.config_hash);
    let listed: Vec<&str> = report.files.iter().map(|f| f.name.as_str()).collect();
    assert!(listed.contains(&"monitor.csv") && listed.contains(&"ensemble.csv"));
}

#[test]
fn cfl_violation_is_reported_before_any_solve() {
    let text = benchmark("constant").unwrap().to_toml().unwrap().replace("dt = \"auto\"", "dt = 0.01");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run_experiment(&cfg, dir.path()).unwrap_err();
    assert!(matches!(err, Error::CflViolated { .. }), "{err}");
    assert!(!dir.path().join("monitor.csv").exists());
}

#[test]
fn json_mirror_matches_toml() {
    let cfg = constant_config();
    let json = serde_json::to_string(&cfg).unwrap();
    let back = ExperimentConfig::from_json(&json).unwrap();
    assert_eq!(back.hash(), cfg.hash());
}

#[test]
fn shifting_the_start_by_a_period_changes_nothing() {
    let s2 = Sphere::new(3);
    let h0 = InitialMap::GreatCircle { k: 1 };
    let init = initialize_from_map(|x| h0.evaluate(&s2, x), TorusGrid::new(1, 64).unwrap(), &s2).unwrap();
    let traj = solve_intrinsic_m1(&init, 0.05, 1e-4, &Generator::zero(), &s2, &SolverOptions::default()).unwrap();
    let field = traj.interpolator();
    let h = |x: &[f64]| h0.evaluate(&s2, x);
    let path = sample_brownian(path_seed(3, 0), 1e-3, 0.05, 1).unwrap();
    let a = assemble_bsde_sample(&field, &path, &[0.25], &h).unwrap();
    let b = assemble_bsde_sample(&field, &path, &[1.25], &h).unwrap();
    for (u, v) in a.ys.iter().zip(&b.ys).chain(a.zs.iter().zip(&b.zs)) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn samples_are_adapted_to_the_path() {
    // (Y_j, Z_j) depend only on B_0..B_j: stopping the path after step j
    // leaves the first j + 1 entries unchanged.
    let s2 = Sphere::new(3);
    let h0 = InitialMap::GreatCircle { k: 1 };
    let init = initialize_from_map(|x| h0.evaluate(&s2, x), TorusGrid::new(1, 64).unwrap(), &s2).unwrap();
    let traj = solve_intrinsic_m1(&init, 0.05, 1e-4, &Generator::zero(), &s2, &SolverOptions::default()).unwrap();
    let field = traj.interpolator();
    let h = |x: &[f64]| h0.evaluate(&s2, x);
    let full = sample_brownian(path_seed(4, 0), 1e-3, 0.05, 1).unwrap();
    let j = 20;
    let stopped = full.truncated(j);
    let a = assemble_bsde_sample(&field, &full, &[0.1], &h).unwrap();
    let b = assemble_bsde_sample(&field, &stopped, &[0.1], &h).unwrap();
    assert_eq!(a.ys[..(j + 1) * 3], b.ys[..(j + 1) * 3]);
    assert_eq!(a.zs[..(j + 1) * 3], b.zs[..(j + 1) * 3]);
    assert_ne!(a.ys[(j + 2) * 3..], b.ys[(j + 2) * 3..]);
}

#[test]
fn mismatched_path_dimension_is_rejected() {
    let s2 = Sphere::new(3);
    let init = initialize_from_map(|_| AmbientVector::from([0.0, 0.0, 1.0]), TorusGrid::new(1, 16).unwrap(), &s2).unwrap();
    let traj = solve_intrinsic_m1(&init, 0.01, 1e-3, &Generator::zero(), &s2, &SolverOptions::default()).unwrap();
    let path = sample_brownian(1, 1e-3, 0.01, 2).unwrap();
    let h = |_: &[f64]| AmbientVector::from([0.0, 0.0, 1.0]);
    assert!(matches!(
        assemble_bsde_sample(&traj.interpolator(), &path, &[0.0, 0.0], &h),
        Err(Error::GridMismatch(_))
    ));
}

#[test]
fn report_with_undefined_values_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&constant_config(), dir.path()).unwrap();
    let c = report.criterion("sqrt_epsilon_exponent").unwrap();
    assert!(c.value.is_nan() && !c.asserted);
    let back = RunReport::load(&dir.path().join("report.json")).unwrap();
    assert!(back.criterion("sqrt_epsilon_exponent").unwrap().value.is_nan());
    assert_eq!(back.to_json().unwrap(), report.to_json().unwrap());
}
