use super::config::{ExperimentConfig, StepSize};
use crate::bsde::{assemble_bsde_sample, bsde_residual, path_seed, sample_brownian};
use crate::error::{Error, Result};
use crate::pde::{initialize_from_map, solve_intrinsic_m1, solve_penalized, SolverOptions, Trajectory};
use crate::vector::{dist, AmbientVector};
use crate::EmbeddedManifold;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyAxis {
    Epsilon,
    Dt,
    Dx,
}

impl FromStr for StudyAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ε" | "eps" | "epsilon" => Ok(StudyAxis::Epsilon),
            "dt" | "Δt" => Ok(StudyAxis::Dt),
            "dx" | "Δx" => Ok(StudyAxis::Dx),
            other => Err(Error::NotFound(other.to_string())),
        }
    }
}

impl fmt::Display for StudyAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StudyAxis::Epsilon => "epsilon",
            StudyAxis::Dt => "dt",
            StudyAxis::Dx => "dx",
        })
    }
}

/// Monitored defect against a refinement parameter, with its fitted
/// log-log order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub axis: StudyAxis,
    pub metric: String,
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    #[serde(deserialize_with = "super::decimal::f64_or_nan")]
    pub fitted_order: f64,
    pub expected: [f64; 2],
    pub passed: bool,
}

/// Least-squares slope of `log y` against `log x` over the positive pairs.
pub fn fit_order(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `max_{t, x} dist_N(v(t, x))` over the recorded nodes.
pub fn max_space_time_dist<M: EmbeddedManifold + ?Sized>(traj: &Trajectory, manifold: &M) -> f64 {
    traj.states
        .iter()
        .flat_map(|s| s.nodes().map(|v| manifold.dist(v)))
        .fold(0.0, f64::max)
}

/// `sup_{t, x} |v(t, x) − h(x)|` of the reconstructed field, sampled at the
/// nodes and the cell midpoints (along each axis) of every recorded state.
pub fn stationary_deviation(traj: &Trajectory, h: &dyn Fn(&[f64]) -> AmbientVector) -> Result<f64> {
    let grid = traj.grid();
    let m = grid.dim();
    let half = 0.5 * grid.spacing();
    let field = traj.interpolator();
    let mut sup: f64 = 0.0;
    for state in &traj.states {
        for node in 0..grid.len() {
            let base = grid.coords(node);
            let shifts: &[[f64; 2]] = if m == 1 {
                &[[0.0, 0.0], [1.0, 0.0]]
            } else {
                &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            };
            for s in shifts {
                let x = [base[0] + s[0] * half, base[1] + s[1] * half];
                let v = field.value(state.t, &x[..m])?;
                sup = sup.max(dist(&v, &h(&x[..m])));
            }
        }
    }
    Ok(sup)
}

fn solve_reference(cfg: &ExperimentConfig) -> Result<(Trajectory, std::sync::Arc<dyn EmbeddedManifold>)> {
    let r = cfg.validate()?;
    let m = r.manifold.as_ref();
    let h = |x: &[f64]| cfg.initial.evaluate(m, x);
    let init = initialize_from_map(h, r.grid, m)?;
    let opts = SolverOptions {
        scheme: cfg.time.scheme,
        record_stride: cfg.time.record_stride,
        monitor_stride: cfg.time.record_stride,
    };
    let traj = match cfg.reference_epsilon() {
        None => solve_intrinsic_m1(&init, cfg.time.t_final, r.dt, &r.generator, m, &opts)?,
        Some(eps) => solve_penalized(&init, eps, cfg.time.t_final, r.dt, &r.generator, m, &opts)?,
    };
    Ok((traj, r.manifold))
}

/// Refinement study along one axis; the config supplies the base level.
///
/// * ε: max space-time `dist_N` over the config's ε ladder (expected ½).
/// * Δx: stationary deviation at `n, 2n, 4n` nodes (expected 2).
/// * Δt: `E[max_j |r_j|²]` at the path step `Δt, Δt/2, Δt/4`, all driven by
///   the same Brownian paths (expected 1).
pub fn convergence_study(cfg: &ExperimentConfig, axis: StudyAxis) -> Result<StudyTable> {
    let resolved = cfg.validate()?;
    let (metric, levels, values, expected) = match axis {
        StudyAxis::Epsilon => {
            if cfg.flow.epsilons.len() < 3 {
                return Err(Error::ConfigInvalid("an ε study needs at least three ε values".into()));
            }
            let m = resolved.manifold.as_ref();
            let init = initialize_from_map(|x| cfg.initial.evaluate(m, x), resolved.grid, m)?;
            let opts = SolverOptions {
                scheme: cfg.time.scheme,
                record_stride: cfg.time.record_stride,
                monitor_stride: usize::MAX,
            };
            let values = cfg
                .flow
                .epsilons
                .iter()
                .map(|&eps| {
                    let traj = solve_penalized(&init, eps, cfg.time.t_final, resolved.dt, &resolved.generator, m, &opts)?;
                    Ok(max_space_time_dist(&traj, m))
                })
                .collect::<Result<Vec<_>>>()?;
            ("max space-time dist_N".to_string(), cfg.flow.epsilons.clone(), values, [0.35, 0.65])
        }
        StudyAxis::Dx => {
            let mut levels = Vec::new();
            let mut values = Vec::new();
            for factor in [1, 2, 4] {
                let mut c = cfg.clone();
                c.grid.n_nodes = cfg.grid.n_nodes * factor;
                c.time.dt = StepSize::Auto;
                let (traj, manifold) = solve_reference(&c)?;
                let h = |x: &[f64]| c.initial.evaluate(manifold.as_ref(), x);
                levels.push(1.0 / c.grid.n_nodes as f64);
                values.push(stationary_deviation(&traj, &h)?);
            }
            ("sup |v − h| (nodes and midpoints)".to_string(), levels, values, [1.6, 2.4])
        }
        StudyAxis::Dt => {
            let (traj, manifold) = solve_reference(cfg)?;
            let m = manifold.as_ref();
            let field = traj.interpolator();
            let h = |x: &[f64]| cfg.initial.evaluate(m, x);
            let grid_m = cfg.grid.m;
            let dt0 = cfg.ensemble.dt;
            let paths = cfg.ensemble.refinement_paths.max(1);
            let rows: Vec<[f64; 3]> = (0..paths)
                .into_par_iter()
                .map(|i| {
                    let seed = path_seed(cfg.seed, i as u64);
                    let finest = sample_brownian(seed, dt0 / 4.0, cfg.time.t_final, grid_m)?;
                    let x = cfg.ensemble.start.point(i, grid_m);
                    let mut out = [0.0; 3];
                    for (slot, factor) in [4usize, 2, 1].into_iter().enumerate() {
                        let path = finest.coarsen(factor)?;
                        let sample = assemble_bsde_sample(&field, &path, &x[..grid_m], &h)?;
                        out[slot] = bsde_residual(&sample, &resolved.generator, m).max_residual_sq();
                    }
                    Ok(out)
                })
                .collect::<Result<_>>()?;
            let n = rows.len() as f64;
            let values = (0..3).map(|c| rows.iter().map(|r| r[c]).sum::<f64>() / n).collect();
            (
                "E[max_j |r_j|²]".to_string(),
                vec![dt0, dt0 / 2.0, dt0 / 4.0],
                values,
                [0.7, 1.3],
            )
        }
    };
    let fitted_order = fit_order(&levels, &values);
    let passed = fitted_order >= expected[0] && fitted_order <= expected[1];
    Ok(StudyTable {
        axis,
        metric,
        levels,
        values,
        fitted_order,
        expected,
        passed,
    })
}
