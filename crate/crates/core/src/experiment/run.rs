use super::config::{ExperimentConfig, Reference, Resolved};
use super::study::{fit_order, max_space_time_dist, stationary_deviation, StudyTable};
use crate::bsde::{
    assemble_bsde_sample, flag_outliers, path_seed, residual_refinement, run_ensemble, sample_brownian, weak_residual,
    EnsembleReport, EnsembleSpec, MartingaleStats, Observable, ResidualRefinement, StartPoints,
};
use crate::diagnostics::{
    fit_energy_growth, max_relative_energy_increase, regularity_scan, singular_set_detect, MonitorRecord, RegularityScan,
    ScanLattice, SingularSetEstimate,
};
use crate::error::{Error, Result};
use crate::generators::{estimate_growth_constants, GeneratorKind, GrowthEstimate};
use crate::pde::{export, initialize_from_map, solve_intrinsic_m1, solve_penalized, InitialMap, SolverOptions, Trajectory};
use crate::vector::AmbientVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Relative per-step energy slack for the dissipation check.
pub const ENERGY_SLACK: f64 = 1e-3;
/// Relative noise allowed between neighbouring rungs of a refinement ladder.
pub const LADDER_NOISE: f64 = 0.2;
/// Below this the tangency defect is roundoff and monotonicity is moot.
pub const TANGENCY_FLOOR: f64 = 1e-12;
pub const TANGENCY_BOUND: f64 = 1e-4;
pub const STATIONARY_BOUND: f64 = 1e-3;
pub const RESIDUAL_RATIO: [f64; 2] = [1.4, 2.6];
pub const SQRT_EPS_ORDER: [f64; 2] = [0.35, 0.65];
/// Outlier factor relative to the median per-x residual.
pub const OUTLIER_FACTOR: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub value: f64,
    pub bound: String,
    pub passed: bool,
    /// Unasserted criteria are recorded but do not affect the exit status.
    pub asserted: bool,
}

impl CriterionResult {
    fn new(name: &str, value: f64, bound: impl Into<String>, passed: bool, asserted: bool) -> Self {
        CriterionResult {
            name: name.into(),
            value,
            bound: bound.into(),
            passed,
            asserted,
        }
    }
}

/// Per-solve summary: one entry per ε, plus the intrinsic reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowSummary {
    pub label: String,
    pub epsilon: Option<f64>,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_dist: f64,
    /// `max dist / √ε`.
    pub sqrt_epsilon_constant: Option<f64>,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_relative_energy_increase: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub energy_growth_constant: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub final_total_energy: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub tangency_defect: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub on_manifold_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub paths: usize,
    pub observable: String,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_residual: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_terminal_residual: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_terminal_mismatch: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_tangency_defect: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub max_on_manifold_defect: f64,
    /// Path indices whose max residual exceeds 5× the median.
    pub residual_outliers: Vec<usize>,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub weak_residual: f64,
    pub refinement: Option<ResidualRefinement>,
    pub martingale: Option<MartingaleStats>,
    pub negative_control: Option<MartingaleStats>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub windows: usize,
    pub small_psi_windows: usize,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub violation_fraction: f64,
    pub candidates: usize,
    pub singular_marked_fraction: Option<f64>,
    pub singular_measure: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub solver_dt: f64,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub record_dt: f64,
    pub criteria: Vec<CriterionResult>,
    pub flows: Vec<FlowSummary>,
    pub sqrt_epsilon_exponent: Option<f64>,
    pub growth: Option<GrowthEstimate>,
    pub stationary_deviation: Option<f64>,
    pub ensemble: Option<EnsembleSummary>,
    pub scan: Option<ScanSummary>,
    #[serde(default)]
    pub studies: Vec<StudyTable>,
    pub files: Vec<FileEntry>,
}

impl RunReport {
    fn empty(cfg: &ExperimentConfig) -> Self {
        RunReport {
            name: cfg.name.clone(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            status: "running".into(),
            error: None,
            solver_dt: f64::NAN,
            record_dt: f64::NAN,
            criteria: Vec::new(),
            flows: Vec::new(),
            sqrt_epsilon_exponent: None,
            growth: None,
            stationary_deviation: None,
            ensemble: None,
            scan: None,
            studies: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Whether every asserted criterion (and every appended study) passed.
    pub fn passed(&self) -> bool {
        self.status == "completed"
            && self.criteria.iter().filter(|c| c.asserted).all(|c| c.passed)
            && self.studies.iter().all(|s| s.passed)
    }

    pub fn criterion(&self, name: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Default output directory: `runs/<name>-<first 12 hash digits>`.
pub fn default_output_dir(cfg: &ExperimentConfig) -> PathBuf {
    PathBuf::from("runs").join(format!("{}-{}", cfg.name, &cfg.hash()[..12]))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<FileEntry> {
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, dir.join(name))?;
    Ok(FileEntry {
        name: name.to_string(),
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(bytes)),
    })
}

struct Solved {
    label: String,
    epsilon: Option<f64>,
    traj: Trajectory,
}

/// Solves, assembles, checks and writes one run into `out_dir`.
///
/// Validation failures return before anything is written. A failure
/// further in still writes `report.json`, marked failed, with whatever
/// files were complete.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let resolved = cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut report = RunReport::empty(cfg);
    report.solver_dt = resolved.dt;
    report.record_dt = resolved.dt * cfg.time.record_stride.max(1) as f64;
    match execute(cfg, &resolved, out_dir, &mut report) {
        Ok(()) => {
            report.status = "completed".into();
            write_atomic(out_dir, "report.json", report.to_json()?.as_bytes())?;
            Ok(report)
        }
        Err(e) => {
            report.status = "failed".into();
            report.error = Some(e.to_string());
            write_atomic(out_dir, "report.json", report.to_json()?.as_bytes())?;
            Err(e)
        }
    }
}

fn applies_stationary(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.initial, InitialMap::GreatCircle { .. } | InitialMap::Constant { .. })
        && cfg.generator.id == "zero"
        && cfg.flow.reference == Reference::Intrinsic
}

fn execute(cfg: &ExperimentConfig, r: &Resolved, out_dir: &Path, report: &mut RunReport) -> Result<()> {
    let manifold = r.manifold.as_ref();
    let h = |x: &[f64]| cfg.initial.evaluate(manifold, x);
    let initial = initialize_from_map(h, r.grid, manifold)?;
    let opts = SolverOptions {
        scheme: cfg.time.scheme,
        record_stride: cfg.time.record_stride,
        monitor_stride: 1,
    };
    let t_final = cfg.time.t_final;

    let mut solved = Vec::new();
    if cfg.flow.reference == Reference::Intrinsic {
        let traj = solve_intrinsic_m1(&initial, t_final, r.dt, &r.generator, manifold, &opts)?;
        solved.push(Solved {
            label: "intrinsic".into(),
            epsilon: None,
            traj,
        });
    }
    for &eps in &cfg.flow.epsilons {
        let traj = solve_penalized(&initial, eps, t_final, r.dt, &r.generator, manifold, &opts)?;
        solved.push(Solved {
            label: format!("eps={eps:e}"),
            epsilon: Some(eps),
            traj,
        });
    }
    let reference = match cfg.reference_epsilon() {
        None => 0,
        Some(eps) => solved.iter().position(|s| s.epsilon == Some(eps)).unwrap_or(0),
    };

    report.files.push(write_atomic(out_dir, "monitor.csv", monitor_csv(&solved).as_bytes())?);

    // Ensembles: the full one on the reference field, small ones per ε.
    let g = Observable::coordinate(cfg.ensemble.observable_axis, manifold.ambient_dim());
    let spec = EnsembleSpec {
        paths: cfg.ensemble.paths,
        seed: cfg.seed,
        dt: cfg.ensemble.dt,
        start: cfg.ensemble.start.clone(),
        checkpoints: cfg.ensemble.checkpoints.clone(),
    };
    let ladder_spec = EnsembleSpec {
        paths: cfg.ensemble.ladder_paths.max(1),
        checkpoints: Vec::new(),
        ..spec.clone()
    };
    let mut flows = Vec::with_capacity(solved.len());
    let mut primary: Option<EnsembleReport> = None;
    for (i, s) in solved.iter().enumerate() {
        let field = s.traj.interpolator();
        let ens = if i == reference {
            run_ensemble(&field, &spec, &h, &r.generator, manifold, &g)?
        } else {
            run_ensemble(&field, &ladder_spec, &h, &r.generator, manifold, &g)?
        };
        let max_dist = max_space_time_dist(&s.traj, manifold);
        flows.push(FlowSummary {
            label: s.label.clone(),
            epsilon: s.epsilon,
            max_dist,
            sqrt_epsilon_constant: s.epsilon.map(|e| max_dist / e.sqrt()),
            max_relative_energy_increase: max_relative_energy_increase(&s.traj.monitors),
            energy_growth_constant: fit_energy_growth(&s.traj.monitors),
            final_total_energy: s.traj.monitors.last().map_or(0.0, MonitorRecord::total_energy),
            tangency_defect: ens.max_tangency_defect(),
            on_manifold_defect: ens.max_on_manifold_defect(),
        });
        if i == reference {
            primary = Some(ens);
        }
    }
    let primary = primary.expect("reference run exists");
    let ref_traj = &solved[reference].traj;
    let field = ref_traj.interpolator();

    let refinement = if cfg.ensemble.refinement_paths > 0 {
        let rs = EnsembleSpec {
            paths: cfg.ensemble.refinement_paths,
            checkpoints: Vec::new(),
            ..spec.clone()
        };
        Some(residual_refinement(&field, &rs, &h, &r.generator, manifold)?)
    } else {
        None
    };
    let weak = weak_residual_on_subgrid(cfg, ref_traj, &h, r)?;
    let per_path: Vec<f64> = primary.summaries.iter().map(|s| s.max_residual).collect();
    report.files.push(write_atomic(out_dir, "ensemble.csv", ensemble_csv(&primary).as_bytes())?);

    // Diagnostics.
    if cfg.generator.id != "zero" && !matches!(r.generator.kind(), GeneratorKind::Custom) {
        report.growth = Some(estimate_growth_constants(&r.generator, manifold, cfg.grid.m, 1000, cfg.seed));
    }
    if applies_stationary(cfg) {
        report.stationary_deviation = Some(stationary_deviation(ref_traj, &h)?);
    }
    let penalized: Vec<&Solved> = solved.iter().filter(|s| s.epsilon.is_some()).collect();
    if penalized.len() >= 2 {
        let eps: Vec<f64> = penalized.iter().map(|s| s.epsilon.unwrap()).collect();
        let dists: Vec<f64> = flows.iter().filter(|f| f.epsilon.is_some()).map(|f| f.max_dist).collect();
        report.sqrt_epsilon_exponent = Some(fit_order(&eps, &dists));
    }
    let (scan, singular) = match &cfg.scan {
        Some(s) => {
            let lattice = ScanLattice {
                n_space: s.n_space,
                n_time: s.n_time,
            };
            let scan = regularity_scan(ref_traj, manifold, s.theta0, s.radius, s.kappa, s.cap, lattice)?;
            let singular = if penalized.len() >= 2 {
                let family: Vec<&Trajectory> = penalized.iter().map(|p| &p.traj).collect();
                Some(singular_set_detect(&family, manifold, s.theta0, &[s.radius, 0.5 * s.radius], lattice)?)
            } else {
                None
            };
            (Some(scan), singular)
        }
        None => (None, None),
    };
    report.files.push(write_atomic(out_dir, "scan.json", scan_json(&scan, &singular)?.as_bytes())?);
    report.scan = scan.as_ref().map(|s| ScanSummary {
        windows: s.entries.len(),
        small_psi_windows: s.small_psi_windows,
        violation_fraction: s.violation_fraction,
        candidates: s.candidates.len(),
        singular_marked_fraction: singular.as_ref().map(|e| e.marked_fraction),
        singular_measure: singular.as_ref().map(|e| e.measure_estimate),
    });
    if cfg.output.write_trajectory {
        let mut bytes = Vec::new();
        export::write_binary(ref_traj, &mut bytes)?;
        report.files.push(write_atomic(out_dir, "trajectory.bin", &bytes)?);
    }

    report.criteria = criteria(cfg, r, &flows, &primary, refinement.as_ref(), report);
    report.ensemble = Some(EnsembleSummary {
        paths: primary.summaries.len(),
        observable: primary.observable.clone(),
        max_residual: primary.max_residual(),
        max_terminal_residual: primary.max_terminal_residual(),
        max_terminal_mismatch: primary.max_terminal_mismatch(),
        max_tangency_defect: primary.max_tangency_defect(),
        max_on_manifold_defect: primary.max_on_manifold_defect(),
        residual_outliers: flag_outliers(&per_path, OUTLIER_FACTOR),
        weak_residual: weak,
        refinement,
        martingale: primary.martingale.clone(),
        negative_control: primary.negative_control.clone(),
    });
    report.flows = flows;
    Ok(())
}

/// Weak-form residual at `t = 0` on one shared path, start points on a
/// uniform sub-grid, `ψ(x) = cos(2πx₁) e₁`.
fn weak_residual_on_subgrid(
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    h: &(dyn Fn(&[f64]) -> AmbientVector + Sync),
    r: &Resolved,
) -> Result<f64> {
    let m = cfg.grid.m;
    let n = if m == 1 { 32 } else { 8 };
    let path = sample_brownian(path_seed(cfg.seed, u64::MAX), cfg.ensemble.dt, cfg.time.t_final, m)?;
    let field = traj.interpolator();
    let starts = StartPoints::SubGrid { n };
    let samples = (0..n.pow(m as u32))
        .map(|i| {
            let x = starts.point(i, m);
            assemble_bsde_sample(&field, &path, &x[..m], h)
        })
        .collect::<Result<Vec<_>>>()?;
    let l = r.manifold.ambient_dim();
    let psi = |x: &[f64]| AmbientVector::basis(l, 0) * (2.0 * std::f64::consts::PI * x[0]).cos();
    Ok(weak_residual(&samples, &psi, 0, &r.generator, r.manifold.as_ref()))
}

fn criteria(
    cfg: &ExperimentConfig,
    r: &Resolved,
    flows: &[FlowSummary],
    primary: &EnsembleReport,
    refinement: Option<&ResidualRefinement>,
    report: &RunReport,
) -> Vec<CriterionResult> {
    let mut out = Vec::new();

    let terminal = primary
        .max_terminal_residual()
        .max(refinement.map_or(0.0, |x| x.max_terminal_residual));
    out.push(CriterionResult::new("terminal_residual", terminal, "== 0", terminal == 0.0, true));

    if let Some(rf) = refinement {
        let trivial = rf.mean_sq_fine == 0.0 && rf.mean_sq_coarse == 0.0;
        let ratio = if trivial { 0.0 } else { rf.mean_square_ratio() };
        let ok = trivial || (ratio >= RESIDUAL_RATIO[0] && ratio <= RESIDUAL_RATIO[1]);
        out.push(CriterionResult::new(
            "residual_refinement_ratio",
            ratio,
            format!("in [{}, {}] (E max|r|², Δt halved)", RESIDUAL_RATIO[0], RESIDUAL_RATIO[1]),
            ok,
            !trivial,
        ));
    }

    if let (Some(mg), Some(nc)) = (&primary.martingale, &primary.negative_control) {
        out.push(CriterionResult::new("martingale_z", mg.max_z(), "<= 4 at every checkpoint", mg.passed(), true));
        // The control only bites where the curvature correction is non-zero.
        let bites = primary
            .summaries
            .iter()
            .any(|s| s.martingale.iter().zip(&s.martingale_flipped).any(|(a, b)| (a - b).abs() > 1e-12));
        out.push(CriterionResult::new("negative_control_z", nc.max_z(), "> 4 at some checkpoint", nc.max_z() > nc.threshold, bites));
    }

    if r.generator.is_zero() {
        let worst = flows.iter().map(|f| f.max_relative_energy_increase).fold(f64::NEG_INFINITY, f64::max);
        out.push(CriterionResult::new(
            "energy_nonincreasing",
            worst,
            format!("<= {ENERGY_SLACK} relative per step"),
            worst <= ENERGY_SLACK,
            true,
        ));
    }

    let tangency = primary.max_tangency_defect();
    out.push(CriterionResult::new(
        "tangency_defect",
        tangency,
        format!("<= {TANGENCY_BOUND}"),
        tangency <= TANGENCY_BOUND,
        cfg.flow.reference == Reference::Intrinsic,
    ));

    let mut ladder: Vec<&FlowSummary> = flows.iter().filter(|f| f.epsilon.is_some()).collect();
    ladder.sort_by(|a, b| b.epsilon.unwrap().total_cmp(&a.epsilon.unwrap()));
    if ladder.len() >= 2 {
        let worst = ladder
            .windows(2)
            .map(|w| (w[1].tangency_defect - TANGENCY_FLOOR) / w[0].tangency_defect.max(TANGENCY_FLOOR))
            .fold(f64::NEG_INFINITY, f64::max);
        out.push(CriterionResult::new(
            "tangency_ladder_monotone",
            worst,
            format!("<= {} (next / previous along decreasing ε)", 1.0 + LADDER_NOISE),
            worst <= 1.0 + LADDER_NOISE,
            true,
        ));
    }

    if let Some(order) = report.sqrt_epsilon_exponent {
        out.push(CriterionResult::new(
            "sqrt_epsilon_exponent",
            order,
            format!("in [{}, {}]", SQRT_EPS_ORDER[0], SQRT_EPS_ORDER[1]),
            order >= SQRT_EPS_ORDER[0] && order <= SQRT_EPS_ORDER[1],
            ladder.len() >= 3 && ladder.iter().all(|f| f.max_dist > 0.0),
        ));
    }

    if let Some(dev) = report.stationary_deviation {
        out.push(CriterionResult::new(
            "stationary_deviation",
            dev,
            format!("<= {STATIONARY_BOUND}"),
            dev <= STATIONARY_BOUND,
            true,
        ));
    }

    let on_n = primary.max_on_manifold_defect();
    out.push(CriterionResult::new("on_manifold_defect", on_n, "reported", true, false));
    out
}

fn monitor_csv(solved: &[Solved]) -> String {
    let mut s = String::from(
        "run,t,dirichlet_energy,penalty_energy,total_energy,time_derivative_rate,time_derivative_energy,max_dist,max_gradient_sq\n",
    );
    for run in solved {
        for m in &run.traj.monitors {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                run.label,
                m.t,
                m.dirichlet_energy,
                m.penalty_energy,
                m.total_energy(),
                m.time_derivative_rate,
                m.time_derivative_energy,
                m.max_dist,
                m.max_gradient_sq
            );
        }
    }
    s
}

fn ensemble_csv(ens: &EnsembleReport) -> String {
    let mut s = String::from("t,mean,std_error,z,control_mean,control_std_error,control_z\n");
    if let (Some(mg), Some(nc)) = (&ens.martingale, &ens.negative_control) {
        for (a, b) in mg.checkpoints.iter().zip(&nc.checkpoints) {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                a.t, a.mean, a.std_error, a.z, b.mean, b.std_error, b.z
            );
        }
    }
    s
}

fn scan_json(scan: &Option<RegularityScan>, singular: &Option<SingularSetEstimate>) -> Result<String> {
    #[derive(Serialize)]
    struct ScanFile<'a> {
        enabled: bool,
        scan: &'a Option<RegularityScan>,
        singular_set: &'a Option<SingularSetEstimate>,
    }
    let file = ScanFile {
        enabled: scan.is_some(),
        scan,
        singular_set: singular,
    };
    Ok(serde_json::to_string_pretty(&file)? + "\n")
}

/// Checks whether `err` is a validation error raised before any output.
pub fn is_validation_error(err: &Error) -> bool {
    matches!(err, Error::ConfigInvalid(_) | Error::CflViolated { .. } | Error::NotFound(_))
}
