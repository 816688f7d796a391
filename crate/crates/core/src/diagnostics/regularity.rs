//! ε-regularity scan and empirical singular-set detection over a
//! space-time lattice of windows.

use super::monotonicity::{DensityField, ParabolicWindow};
use crate::error::Result;
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::pde::{discrete_gradient, Trajectory};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Lattice of window centres: `n_space` points per axis at
/// `(i + ½)/n_space` and `n_time` times `T·(k + 1)/n_time`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanLattice {
    pub n_space: usize,
    pub n_time: usize,
}

impl Default for ScanLattice {
    fn default() -> Self {
        ScanLattice { n_space: 8, n_time: 8 }
    }
}

impl ScanLattice {
    pub fn centres(&self, m: usize, t_final: f64) -> Vec<(f64, [f64; 2])> {
        let mut out = Vec::new();
        let ns = self.n_space;
        for k in 0..self.n_time {
            let t0 = t_final * (k + 1) as f64 / self.n_time as f64;
            let rows = if m == 2 { ns } else { 1 };
            for j in 0..rows {
                for i in 0..ns {
                    let x = (i as f64 + 0.5) / ns as f64;
                    let y = if m == 2 { (j as f64 + 0.5) / ns as f64 } else { 0.0 };
                    out.push((t0, [x, y]));
                }
            }
        }
        out
    }

    /// Space-time volume represented by one lattice point.
    pub fn cell_volume(&self, m: usize, t_final: f64) -> f64 {
        (1.0 / self.n_space as f64).powi(m as i32) * t_final / self.n_time as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub t0: f64,
    pub x0: [f64; 2],
    pub psi: f64,
    /// sup of `|∇v|² + G/ε` over `Q_{κR}(z0)`.
    pub local_sup: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityScan {
    pub radius: f64,
    pub kappa: f64,
    pub theta0: f64,
    /// Trial cap on the local sup for small-Ψ windows.
    pub cap: f64,
    pub entries: Vec<ScanEntry>,
    pub small_psi_windows: usize,
    /// Fraction of small-Ψ windows whose local sup exceeds the cap.
    pub violation_fraction: f64,
    /// Windows with Ψ ≥ θ0: candidates for the singular set.
    pub candidates: Vec<[f64; 3]>,
}

fn local_sup<M: EmbeddedManifold + ?Sized>(
    traj: &Trajectory,
    grads: &[Vec<f64>],
    manifold: &M,
    w: &ParabolicWindow,
    kappa: f64,
) -> f64 {
    let grid = traj.grid();
    let m = grid.dim();
    let ml = traj.ambient_dim() * m;
    let eps = traj.epsilon().unwrap_or(f64::INFINITY);
    let mut sup: f64 = 0.0;
    let mut any = false;
    for (k, state) in traj.states.iter().enumerate() {
        for node in 0..grid.len() {
            let x = grid.coords(node);
            if !w.in_cylinder(kappa, state.t, &x[..m]) {
                continue;
            }
            any = true;
            let g = &grads[k][node * ml..(node + 1) * ml];
            let pen = if eps.is_finite() { manifold.penalty_potential(state.node(node)) / eps } else { 0.0 };
            sup = sup.max(crate::vector::dot(g, g) + pen);
        }
    }
    if !any {
        // the cylinder is narrower than the grid: fall back to the nearest sample
        let state = traj.nearest_state(w.t0);
        let k = traj.states.iter().position(|s| std::ptr::eq(s, state)).unwrap_or(0);
        let n = grid.nodes_per_axis() as f64;
        let i = ((w.x0[0] * n).round() as usize) % grid.nodes_per_axis();
        let j = if m == 2 { ((w.x0[1] * n).round() as usize) % grid.nodes_per_axis() } else { 0 };
        let node = grid.flat_index([i, j]);
        let g = &grads[k][node * ml..(node + 1) * ml];
        let pen = if eps.is_finite() { manifold.penalty_potential(state.node(node)) / eps } else { 0.0 };
        sup = crate::vector::dot(g, g) + pen;
    }
    sup
}

/// Records `(Ψ_ε(R), sup_{Q_{κR}} e)` on every admissible lattice window.
pub fn regularity_scan<M: EmbeddedManifold + ?Sized>(
    traj: &Trajectory,
    manifold: &M,
    theta0: f64,
    radius: f64,
    kappa: f64,
    cap: f64,
    lattice: ScanLattice,
) -> Result<RegularityScan> {
    let field = DensityField::new(traj, manifold);
    let grads: Vec<Vec<f64>> = traj.states.iter().map(discrete_gradient).collect();
    let windows: Vec<ParabolicWindow> = lattice
        .centres(traj.grid().dim(), traj.final_time())
        .into_iter()
        .filter_map(|(t0, x0)| ParabolicWindow::new(t0, x0, radius).ok())
        .collect();
    let entries = windows
        .par_iter()
        .map(|w| {
            Ok(ScanEntry {
                t0: w.t0,
                x0: w.x0,
                psi: field.psi(w)?,
                local_sup: local_sup(traj, &grads, manifold, w, kappa),
            })
        })
        .collect::<Vec<Result<ScanEntry>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let small: Vec<&ScanEntry> = entries.iter().filter(|e| e.psi < theta0).collect();
    let violations = small.iter().filter(|e| e.local_sup > cap).count();
    let candidates = entries
        .iter()
        .filter(|e| e.psi >= theta0)
        .map(|e| [e.t0, e.x0[0], e.x0[1]])
        .collect();
    Ok(RegularityScan {
        radius,
        kappa,
        theta0,
        cap,
        small_psi_windows: small.len(),
        violation_fraction: if small.is_empty() { 0.0 } else { violations as f64 / small.len() as f64 },
        entries,
        candidates,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSetEstimate {
    pub centres: Vec<[f64; 3]>,
    pub mask: Vec<bool>,
    pub marked_fraction: f64,
    /// marked count × lattice cell volume.
    pub measure_estimate: f64,
}

/// Marks lattice points where `min_ε Ψ_ε(R) ≥ θ0` for every `R` in the
/// ladder (the finite-ladder stand-in for the liminf as `ε → 0`).
pub fn singular_set_detect<M: EmbeddedManifold + ?Sized>(
    family: &[&Trajectory],
    manifold: &M,
    theta0: f64,
    radii: &[f64],
    lattice: ScanLattice,
) -> Result<SingularSetEstimate> {
    if family.len() < 2 {
        return Err(crate::error::Error::ConfigInvalid("singular-set detection needs at least two ε values".into()));
    }
    let t_final = family.iter().map(|t| t.final_time()).fold(f64::INFINITY, f64::min);
    let m = family[0].grid().dim();
    let fields: Vec<DensityField> = family.iter().map(|t| DensityField::new(t, manifold)).collect();
    let lattice_pts = lattice.centres(m, t_final);
    let mask = lattice_pts
        .par_iter()
        .map(|&(t0, x0)| {
            for &r in radii {
                let Ok(w) = ParabolicWindow::new(t0, x0, r) else { return Ok(false) };
                for f in &fields {
                    if f.psi(&w)? < theta0 {
                        return Ok(false);
                    }
                }
            }
            Ok(!radii.is_empty())
        })
        .collect::<Vec<Result<bool>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let marked = mask.iter().filter(|&&b| b).count();
    Ok(SingularSetEstimate {
        centres: lattice_pts.iter().map(|(t, x)| [*t, x[0], x[1]]).collect(),
        marked_fraction: marked as f64 / mask.len().max(1) as f64,
        measure_estimate: marked as f64 * lattice.cell_volume(m, t_final),
        mask,
    })
}
