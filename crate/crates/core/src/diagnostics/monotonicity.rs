//! Gaussian-weighted localized energies `Φ_ε(R)`, `Ψ_ε(R)`.

use super::kernel::{heat_kernel_euclidean, torus_displacement};
use crate::error::{Error, Result};
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::pde::{discrete_gradient, FieldState, Trajectory};
use serde::{Deserialize, Serialize};

/// Parabolic window around `z0 = (t0, x0)` with radius `R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicWindow {
    pub t0: f64,
    pub x0: [f64; 2],
    pub radius: f64,
}

impl ParabolicWindow {
    /// Requires `0 < R < min(1/2, √t0/2)`.
    pub fn new(t0: f64, x0: [f64; 2], radius: f64) -> Result<Self> {
        let bound = 0.5f64.min(t0.max(0.0).sqrt() / 2.0);
        if !(radius > 0.0 && radius < bound) {
            return Err(Error::WindowOutOfRange(format!(
                "radius {radius} not in (0, {bound}) for t0 = {t0}"
            )));
        }
        Ok(ParabolicWindow { t0, x0, radius })
    }

    /// Time interval `(t0 − 4R², t0 − R²)` of the annulus `T_R`.
    pub fn annulus_times(&self) -> (f64, f64) {
        let r2 = self.radius * self.radius;
        (self.t0 - 4.0 * r2, self.t0 - r2)
    }

    /// Whether `(t, x)` lies in the cylinder `Q_{κR}(z0)`.
    pub fn in_cylinder(&self, kappa: f64, t: f64, x: &[f64]) -> bool {
        let r = kappa * self.radius;
        let d = torus_displacement(x, &self.x0[..x.len()]);
        let dist2: f64 = d[..x.len()].iter().map(|v| v * v).sum();
        dist2 < r * r && (t - self.t0).abs() < r * r
    }
}

/// `φ_{x0}`: 1 on `B(x0, 1/4)`, 0 outside `B(x0, 1/2)`, quintic in between.
pub fn localization_cutoff(r: f64) -> f64 {
    let t = ((r - 0.25) / 0.25).clamp(0.0, 1.0);
    1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

/// `½|∇v|² + G(v)/ε` at every node (central-difference gradient).
pub fn energy_density<M: EmbeddedManifold + ?Sized>(state: &FieldState, epsilon: f64, manifold: &M) -> Vec<f64> {
    let ml = state.ambient_dim * state.grid.dim();
    let grad = discrete_gradient(state);
    state
        .nodes()
        .zip(grad.chunks(ml))
        .map(|(v, g)| {
            let pen = if epsilon.is_finite() { manifold.penalty_potential(v) / epsilon } else { 0.0 };
            0.5 * crate::vector::dot(g, g) + pen
        })
        .collect()
}

/// Energy densities of every recorded state, shared by many windows.
pub struct DensityField<'a> {
    traj: &'a Trajectory,
    densities: Vec<Vec<f64>>,
}

impl<'a> DensityField<'a> {
    pub fn new<M: EmbeddedManifold + ?Sized>(traj: &'a Trajectory, manifold: &M) -> Self {
        let eps = traj.epsilon().unwrap_or(f64::INFINITY);
        let densities = traj.states.iter().map(|s| energy_density(s, eps, manifold)).collect();
        DensityField { traj, densities }
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    pub fn density(&self, k: usize) -> &[f64] {
        &self.densities[k]
    }

    /// `∫ e_k(x) ρ_{z0}(t, x) φ²_{x0}(x) dx` over the fundamental domain.
    fn weighted_integral(&self, k: usize, w: &ParabolicWindow, t: f64) -> f64 {
        let grid = self.traj.grid();
        let m = grid.dim();
        let tau = w.t0 - t;
        let dens = &self.densities[k];
        let mut sum = 0.0;
        for (node, e) in dens.iter().enumerate() {
            if *e == 0.0 {
                continue;
            }
            let x = grid.coords(node);
            let d = torus_displacement(&x[..m], &w.x0[..m]);
            let r2: f64 = d[..m].iter().map(|v| v * v).sum();
            let phi = localization_cutoff(r2.sqrt());
            if phi == 0.0 {
                continue;
            }
            sum += e * heat_kernel_euclidean(tau, r2, m) * phi * phi;
        }
        sum * grid.cell_volume()
    }

    // Integral at an arbitrary time, linear in the recorded densities.
    fn integral_at(&self, w: &ParabolicWindow, t: f64) -> f64 {
        let h = self.traj.record_dt;
        let s = t / h;
        let k = s.floor().max(0.0) as usize;
        let last = self.traj.states.len() - 1;
        if k >= last {
            return self.weighted_integral(last, w, t);
        }
        let frac = s - k as f64;
        let mut v = (1.0 - frac) * self.weighted_integral(k, w, t);
        if frac > 0.0 {
            v += frac * self.weighted_integral(k + 1, w, t);
        }
        v
    }

    fn check_window(&self, w: &ParabolicWindow) -> Result<()> {
        if w.t0 > self.traj.final_time() * (1.0 + 1e-12) {
            return Err(Error::WindowOutOfRange(format!(
                "t0 = {} beyond the trajectory end {}",
                w.t0,
                self.traj.final_time()
            )));
        }
        Ok(())
    }

    /// `Φ_ε(R) = R² ∫ e(t0 − R²/2, x) ρ φ² dx`.
    pub fn phi(&self, w: &ParabolicWindow) -> Result<f64> {
        self.check_window(w)?;
        let t = w.t0 - 0.5 * w.radius * w.radius;
        Ok(w.radius * w.radius * self.integral_at(w, t))
    }

    /// `Ψ_ε(R) = ∫_{t0−4R²}^{t0−R²} ∫ e ρ φ² dx dt`, trapezoidal in time on
    /// the recorded states plus the two interval ends.
    pub fn psi(&self, w: &ParabolicWindow) -> Result<f64> {
        self.check_window(w)?;
        let (ta, tb) = w.annulus_times();
        let h = self.traj.record_dt;
        let mut nodes = vec![(ta, self.integral_at(w, ta))];
        let first = (ta / h).floor() as usize + 1;
        let mut k = first;
        while (k as f64) * h < tb && k < self.traj.states.len() {
            let t = self.traj.states[k].t;
            if t > ta {
                nodes.push((t, self.weighted_integral(k, w, t)));
            }
            k += 1;
        }
        nodes.push((tb, self.integral_at(w, tb)));
        Ok(nodes
            .windows(2)
            .map(|p| 0.5 * (p[1].0 - p[0].0) * (p[0].1 + p[1].1))
            .sum())
    }
}

/// `Φ_ε(R)` for a single window.
pub fn phi_quantity<M: EmbeddedManifold + ?Sized>(traj: &Trajectory, manifold: &M, window: &ParabolicWindow) -> Result<f64> {
    DensityField::new(traj, manifold).phi(window)
}

/// `Ψ_ε(R)` for a single window.
pub fn psi_quantity<M: EmbeddedManifold + ?Sized>(traj: &Trajectory, manifold: &M, window: &ParabolicWindow) -> Result<f64> {
    DensityField::new(traj, manifold).psi(window)
}

/// Fits `Ĉ` in `Ψ(R) ≤ e^{Ĉ(R0−R)} Ψ(R0) + Ĉ(R0−R)` over a radius ladder
/// ending at `R0`; the smallest `Ĉ` from a bisection search.
pub fn fit_monotonicity_constant(radii: &[f64], psi: &[f64]) -> f64 {
    let (Some(&r0), Some(&p0)) = (radii.last(), psi.last()) else { return 0.0 };
    let holds = |c: f64| {
        radii
            .iter()
            .zip(psi)
            .all(|(&r, &p)| p <= (c * (r0 - r)).exp() * p0 + c * (r0 - r) + 1e-14)
    };
    if holds(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
