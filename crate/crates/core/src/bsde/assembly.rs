use super::brownian::BrownianPath;
use crate::error::{Error, Result};
use crate::pde::FieldInterpolator;
use crate::vector::AmbientVector;
use serde::{Deserialize, Serialize};

/// `(Y, Z)` along one Brownian path started at `x`:
/// `Y_j = v(T − t_j, B_{t_j} + x)`, `Z_j = ∇_x v(T − t_j, B_{t_j} + x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsdeSample {
    pub x: [f64; 2],
    pub m: usize,
    pub ambient_dim: usize,
    pub dt: f64,
    pub seed: u64,
    /// Copy of the driving increments `[j][axis]`.
    pub increments: Vec<f64>,
    /// `[j][component]`, `j = 0..=K`.
    pub ys: Vec<f64>,
    /// `[j][axis][component]`.
    pub zs: Vec<f64>,
    /// `ξ = h(B_T + x)`.
    pub xi: AmbientVector,
}

impl BsdeSample {
    pub fn steps(&self) -> usize {
        self.ys.len() / self.ambient_dim - 1
    }

    pub fn y(&self, j: usize) -> &[f64] {
        &self.ys[j * self.ambient_dim..(j + 1) * self.ambient_dim]
    }

    /// All `m` gradient rows at step `j`, axis-major.
    pub fn z(&self, j: usize) -> &[f64] {
        let w = self.m * self.ambient_dim;
        &self.zs[j * w..(j + 1) * w]
    }

    pub fn z_axis(&self, j: usize, axis: usize) -> &[f64] {
        let l = self.ambient_dim;
        &self.z(j)[axis * l..(axis + 1) * l]
    }

    pub fn increment(&self, j: usize) -> &[f64] {
        &self.increments[j * self.m..(j + 1) * self.m]
    }

    /// `|Y_K − ξ|`: interpolation mismatch at the terminal time.
    pub fn terminal_mismatch(&self) -> f64 {
        crate::vector::dist(self.y(self.steps()), &self.xi)
    }
}

/// Reads `(Y, Z)` off a solved field along `path` shifted by `x`.
pub fn assemble_bsde_sample(
    field: &FieldInterpolator<'_>,
    path: &BrownianPath,
    x: &[f64],
    h: &dyn Fn(&[f64]) -> AmbientVector,
) -> Result<BsdeSample> {
    let traj = field.trajectory();
    let m = traj.grid().dim();
    if path.m != m {
        return Err(Error::GridMismatch(format!("path dimension {} vs grid dimension {m}", path.m)));
    }
    let t_final = path.final_time();
    if (t_final - traj.final_time()).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "path horizon {t_final} vs trajectory horizon {}",
            traj.final_time()
        )));
    }
    let k = path.steps();
    let l = traj.ambient_dim();
    let mut ys = Vec::with_capacity((k + 1) * l);
    let mut zs = Vec::with_capacity((k + 1) * m * l);
    let mut point = [0.0; 2];
    for j in 0..=k {
        let b = path.position(j);
        for a in 0..m {
            point[a] = b[a] + x[a];
        }
        let t = (t_final - path.time(j)).max(0.0);
        let (y, z) = field.eval(t, &point[..m])?;
        ys.extend_from_slice(&y);
        zs.extend_from_slice(&z);
    }
    let b = path.position(k);
    for a in 0..m {
        point[a] = (b[a] + x[a]).rem_euclid(1.0);
    }
    let mut x0 = [0.0; 2];
    for a in 0..m {
        x0[a] = x[a];
    }
    Ok(BsdeSample {
        x: x0,
        m,
        ambient_dim: l,
        dt: path.dt,
        seed: path.seed,
        increments: path.increments.clone(),
        ys,
        zs,
        xi: h(&point[..m]),
    })
}
