use super::assembly::BsdeSample;
use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::vector::{dot, AmbientVector};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Minimum ensemble size for [`martingale_test`].
pub const MIN_PATHS: usize = 100;

/// Default z-score threshold.
pub const Z_THRESHOLD: f64 = 4.0;

/// A `C²` test function on `N`, given through an ambient extension `ḡ`.
///
/// The intrinsic Hessian is recovered as
/// `Hess g(y)(z, z) = D²ḡ(y)(z, z) + ⟨∇ḡ(y), A(y)(z, z)⟩`.
#[derive(Clone)]
pub struct Observable {
    name: String,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&[f64]) -> AmbientVector + Send + Sync>,
    hessian: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Observable").field("name", &self.name).finish()
    }
}

impl Observable {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> AmbientVector + Send + Sync + 'static,
        hessian: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Observable {
            name: name.into(),
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    /// `g(p) = ⟨p, e_axis⟩`.
    pub fn coordinate(axis: usize, ambient_dim: usize) -> Self {
        let e = AmbientVector::basis(ambient_dim, axis);
        Observable::new(format!("coordinate_{axis}"), move |p| p[axis], move |_| e.clone(), |_, _| 0.0)
    }

    /// `g ≡ c`.
    pub fn constant(c: f64, ambient_dim: usize) -> Self {
        Observable::new("constant", move |_| c, move |_| AmbientVector::zeros(ambient_dim), |_, _| 0.0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        (self.value)(p)
    }

    pub fn gradient(&self, p: &[f64]) -> AmbientVector {
        (self.gradient)(p)
    }

    pub fn ambient_hessian(&self, p: &[f64], u: &[f64]) -> f64 {
        (self.hessian)(p, u)
    }
}

/// Sign of the second-fundamental-form correction in the intrinsic Hessian.
/// `Flipped` is the injected bug used as a negative control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurvatureDrift {
    #[default]
    Correct,
    Flipped,
}

impl CurvatureDrift {
    fn sign(self) -> f64 {
        match self {
            CurvatureDrift::Correct => 1.0,
            CurvatureDrift::Flipped => -1.0,
        }
    }
}

/// `M^g_j = g(Y_j) − g(Y_0) − ½ Σ_{k<j} Σ_i Hess g(Z_k^i, Z_k^i) Δt + Σ_{k<j} ⟨∇g, f̄⟩ Δt`.
pub fn martingale_path<M: EmbeddedManifold + ?Sized>(
    sample: &BsdeSample,
    g: &Observable,
    generator: &Generator,
    manifold: &M,
    drift: CurvatureDrift,
) -> Vec<f64> {
    let k = sample.steps();
    let dt = sample.dt;
    let g0 = g.value(sample.y(0));
    let mut out = Vec::with_capacity(k + 1);
    let mut integral = 0.0;
    out.push(0.0);
    for j in 0..k {
        let y = sample.y(j);
        let grad = g.gradient(y);
        let mut hess = 0.0;
        for axis in 0..sample.m {
            let z = sample.z_axis(j, axis);
            hess += g.ambient_hessian(y, z) + drift.sign() * dot(&grad, &manifold.extended_sff(y, z));
        }
        let mut rate = -0.5 * hess;
        if !generator.is_zero() {
            rate += dot(&grad, &generator.eval_extended(manifold, y, sample.z(j)));
        }
        integral += rate * dt;
        out.push(g.value(sample.y(j + 1)) - g0 + integral);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    #[serde(deserialize_with = "crate::experiment::decimal::f64_or_nan")]
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleStats {
    pub paths: usize,
    pub checkpoints: Vec<CheckpointStat>,
    pub threshold: f64,
}

impl MartingaleStats {
    pub fn max_z(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.z).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.checkpoints.iter().all(|c| c.z <= self.threshold)
    }
}

pub(crate) fn checkpoint_indices(dt: f64, checkpoints: &[f64]) -> Result<Vec<usize>> {
    checkpoints
        .iter()
        .map(|&t| {
            let j = (t / dt).round();
            if (j * dt - t).abs() > 1e-9 * dt.max(t) {
                Err(Error::GridMismatch(format!("checkpoint {t} is not a multiple of Δt = {dt}")))
            } else {
                Ok(j as usize)
            }
        })
        .collect()
}

/// Per-checkpoint mean, standard error and `z = |mean| / stderr` over an
/// ensemble of `M^g` paths sampled every `dt`. `0/0` counts as `z = 0`.
pub fn martingale_test(paths: &[Vec<f64>], dt: f64, checkpoints: &[f64]) -> Result<MartingaleStats> {
    if paths.len() < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            required: MIN_PATHS,
            got: paths.len(),
        });
    }
    let idx = checkpoint_indices(dt, checkpoints)?;
    let values = paths
        .iter()
        .map(|p| {
            idx.iter()
                .map(|&j| p.get(j).copied().ok_or_else(|| Error::GridMismatch(format!("checkpoint index {j} beyond the path"))))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    checkpoint_stats(&values, checkpoints)
}

/// Statistics from checkpoint values laid out `[path][checkpoint]`.
pub fn checkpoint_stats(values: &[Vec<f64>], times: &[f64]) -> Result<MartingaleStats> {
    if values.len() < MIN_PATHS {
        return Err(Error::InsufficientPaths {
            required: MIN_PATHS,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let checkpoints = times
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let mean = values.iter().map(|v| v[c]).sum::<f64>() / n;
            let var = values.iter().map(|v| (v[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let std_error = (var / n).sqrt();
            let z = if std_error > 0.0 {
                mean.abs() / std_error
            } else if mean == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            CheckpointStat { t, mean, std_error, z }
        })
        .collect();
    Ok(MartingaleStats {
        paths: values.len(),
        checkpoints,
        threshold: Z_THRESHOLD,
    })
}
