use super::assembly::{assemble_bsde_sample, BsdeSample};
use super::brownian::{path_seed, sample_brownian, step_count};
use super::martingale::{checkpoint_stats, martingale_path, CurvatureDrift, MartingaleStats, Observable, MIN_PATHS};
use super::residual::{bsde_residual, on_manifold_defect, tangency_defect};
use super::martingale::checkpoint_indices;
use crate::error::Result;
use crate::generators::Generator;
use crate::geometry::EmbeddedManifold;
use crate::pde::FieldInterpolator;
use crate::vector::AmbientVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Where the ensemble's paths start.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StartPoints {
    /// Every path starts at the same `x`.
    Fixed { x: Vec<f64> },
    /// Path `i` starts at node `i mod n^m` of a uniform `n^m` sub-grid.
    SubGrid { n: usize },
}

impl StartPoints {
    pub fn point(&self, index: usize, m: usize) -> [f64; 2] {
        let mut x = [0.0; 2];
        match self {
            StartPoints::Fixed { x: p } => {
                for a in 0..m {
                    x[a] = p.get(a).copied().unwrap_or(0.0);
                }
            }
            StartPoints::SubGrid { n } => {
                let n = (*n).max(1);
                let mut i = index % n.pow(m as u32);
                for a in x.iter_mut().take(m) {
                    *a = (i % n) as f64 / n as f64;
                    i /= n;
                }
            }
        }
        x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub paths: usize,
    pub seed: u64,
    pub dt: f64,
    pub start: StartPoints,
    /// Times at which martingale statistics are collected.
    pub checkpoints: Vec<f64>,
}

/// Everything kept from one path once its sample is dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub index: usize,
    pub seed: u64,
    pub x: [f64; 2],
    pub max_residual: f64,
    pub terminal_residual: f64,
    pub terminal_mismatch: f64,
    pub tangency_defect: f64,
    pub on_manifold_defect: f64,
    /// `M^g` at each checkpoint, correct drift.
    pub martingale: Vec<f64>,
    /// `M^g` at each checkpoint, flipped drift.
    pub martingale_flipped: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub observable: String,
    pub summaries: Vec<PathSummary>,
    pub martingale: Option<MartingaleStats>,
    pub negative_control: Option<MartingaleStats>,
}

impl EnsembleReport {
    pub fn max_residual(&self) -> f64 {
        self.summaries.iter().map(|s| s.max_residual).fold(0.0, f64::max)
    }

    pub fn max_terminal_residual(&self) -> f64 {
        self.summaries.iter().map(|s| s.terminal_residual).fold(0.0, f64::max)
    }

    pub fn max_terminal_mismatch(&self) -> f64 {
        self.summaries.iter().map(|s| s.terminal_mismatch).fold(0.0, f64::max)
    }

    pub fn max_tangency_defect(&self) -> f64 {
        self.summaries.iter().map(|s| s.tangency_defect).fold(0.0, f64::max)
    }

    pub fn max_on_manifold_defect(&self) -> f64 {
        self.summaries.iter().map(|s| s.on_manifold_defect).fold(0.0, f64::max)
    }
}

/// Assembles one sample per path (in parallel), runs the per-path checks
/// and reduces statistics in path order.
pub fn run_ensemble<M: EmbeddedManifold + ?Sized>(
    field: &FieldInterpolator<'_>,
    spec: &EnsembleSpec,
    h: &(dyn Fn(&[f64]) -> AmbientVector + Sync),
    generator: &Generator,
    manifold: &M,
    g: &Observable,
) -> Result<EnsembleReport> {
    let traj = field.trajectory();
    let m = traj.grid().dim();
    let t_final = traj.final_time();
    step_count(spec.dt, t_final)?;
    let idx = checkpoint_indices(spec.dt, &spec.checkpoints)?;
    let summaries: Vec<PathSummary> = (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let seed = path_seed(spec.seed, i as u64);
            let path = sample_brownian(seed, spec.dt, t_final, m)?;
            let x = spec.start.point(i, m);
            let sample = assemble_bsde_sample(field, &path, &x[..m], h)?;
            Ok(summarize(i, &sample, generator, manifold, g, &idx))
        })
        .collect::<Result<_>>()?;
    let (martingale, negative_control) = if spec.paths >= MIN_PATHS && !idx.is_empty() {
        let correct: Vec<Vec<f64>> = summaries.iter().map(|s| s.martingale.clone()).collect();
        let flipped: Vec<Vec<f64>> = summaries.iter().map(|s| s.martingale_flipped.clone()).collect();
        (
            Some(checkpoint_stats(&correct, &spec.checkpoints)?),
            Some(checkpoint_stats(&flipped, &spec.checkpoints)?),
        )
    } else {
        (None, None)
    };
    Ok(EnsembleReport {
        observable: g.name().to_string(),
        summaries,
        martingale,
        negative_control,
    })
}

fn summarize<M: EmbeddedManifold + ?Sized>(
    index: usize,
    sample: &BsdeSample,
    generator: &Generator,
    manifold: &M,
    g: &Observable,
    idx: &[usize],
) -> PathSummary {
    let ledger = bsde_residual(sample, generator, manifold);
    let mg = martingale_path(sample, g, generator, manifold, CurvatureDrift::Correct);
    let mf = martingale_path(sample, g, generator, manifold, CurvatureDrift::Flipped);
    PathSummary {
        index,
        seed: sample.seed,
        x: sample.x,
        max_residual: ledger.max_residual,
        terminal_residual: ledger.terminal_residual(),
        terminal_mismatch: ledger.terminal_mismatch,
        tangency_defect: tangency_defect(sample, manifold),
        on_manifold_defect: on_manifold_defect(sample, manifold),
        martingale: idx.iter().map(|&j| mg[j]).collect(),
        martingale_flipped: idx.iter().map(|&j| mf[j]).collect(),
    }
}

/// Residual self-convergence under `Δt` halving, driven by the same
/// Brownian motion at both resolutions (the coarse path sums pairs of
/// fine increments).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualRefinement {
    pub dt_coarse: f64,
    pub dt_fine: f64,
    /// `E[max_j |r_j|]`.
    pub mean_max_coarse: f64,
    pub mean_max_fine: f64,
    /// `E[max_j |r_j|²]`, the first-order metric.
    pub mean_sq_coarse: f64,
    pub mean_sq_fine: f64,
    pub max_terminal_residual: f64,
}

impl ResidualRefinement {
    pub fn mean_square_ratio(&self) -> f64 {
        self.mean_sq_coarse / self.mean_sq_fine
    }

    pub fn mean_max_ratio(&self) -> f64 {
        self.mean_max_coarse / self.mean_max_fine
    }
}

pub fn residual_refinement<M: EmbeddedManifold + ?Sized>(
    field: &FieldInterpolator<'_>,
    spec: &EnsembleSpec,
    h: &(dyn Fn(&[f64]) -> AmbientVector + Sync),
    generator: &Generator,
    manifold: &M,
) -> Result<ResidualRefinement> {
    let traj = field.trajectory();
    let m = traj.grid().dim();
    let t_final = traj.final_time();
    let dt_fine = spec.dt / 2.0;
    let rows: Vec<[f64; 5]> = (0..spec.paths)
        .into_par_iter()
        .map(|i| {
            let seed = path_seed(spec.seed, i as u64);
            let fine = sample_brownian(seed, dt_fine, t_final, m)?;
            let coarse = fine.coarsen(2)?;
            let x = spec.start.point(i, m);
            let lf = bsde_residual(&assemble_bsde_sample(field, &fine, &x[..m], h)?, generator, manifold);
            let lc = bsde_residual(&assemble_bsde_sample(field, &coarse, &x[..m], h)?, generator, manifold);
            Ok([
                lc.max_residual,
                lf.max_residual,
                lc.max_residual_sq(),
                lf.max_residual_sq(),
                lc.terminal_residual().max(lf.terminal_residual()),
            ])
        })
        .collect::<Result<_>>()?;
    let n = rows.len().max(1) as f64;
    let mean = |c: usize| rows.iter().map(|r| r[c]).sum::<f64>() / n;
    Ok(ResidualRefinement {
        dt_coarse: spec.dt,
        dt_fine,
        mean_max_coarse: mean(0),
        mean_max_fine: mean(1),
        mean_sq_coarse: mean(2),
        mean_sq_fine: mean(3),
        max_terminal_residual: rows.iter().map(|r| r[4]).fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sub_grid_start_points() {
        let s = StartPoints::SubGrid { n: 4 };
        assert_eq!(s.point(0, 1), [0.0, 0.0]);
        assert_eq!(s.point(3, 1), [0.75, 0.0]);
        assert_eq!(s.point(5, 1), [0.25, 0.0]);
        assert_eq!(s.point(6, 2), [0.5, 0.25]);
    }

    #[test]
    fn checkpoint_alignment() {
        assert_eq!(checkpoint_indices(1e-4, &[0.05, 0.1, 0.25]).unwrap(), vec![500, 1000, 2500]);
        assert!(checkpoint_indices(0.1, &[0.05]).is_err());
    }
}
