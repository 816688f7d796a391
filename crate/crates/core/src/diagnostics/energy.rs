use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::pde::{discrete_gradient, FieldState};
use serde::{Deserialize, Serialize};

/// Per-time energy monitor of a solver run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    /// `∫ ½|∇v|² dx`
    pub dirichlet_energy: f64,
    /// `(1/ε) ∫ G(v) dx`; zero for intrinsic runs.
    pub penalty_energy: f64,
    /// `∫ |∂_t v|² dx` at this step.
    pub time_derivative_rate: f64,
    /// `∫_0^t ∫ |∂_t v|² dx ds` accumulated by the solver.
    pub time_derivative_energy: f64,
    pub max_dist: f64,
    pub max_gradient_sq: f64,
}

impl MonitorRecord {
    pub fn total_energy(&self) -> f64 {
        self.dirichlet_energy + self.penalty_energy
    }
}

/// `∫ |∂_t v|² dx` by forward difference between two states.
pub fn time_derivative_rate(state: &FieldState, prev: &FieldState) -> f64 {
    let dt = state.t - prev.t;
    if dt <= 0.0 {
        return 0.0;
    }
    let sum: f64 = state
        .values
        .iter()
        .zip(&prev.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    sum / (dt * dt) * state.grid.cell_volume()
}

/// Dirichlet energy with one-sided edge differences: the quadratic form of
/// the compact Laplacian stencil, so the discrete heat flow dissipates it.
pub fn dirichlet_energy(state: &FieldState) -> f64 {
    let grid = state.grid;
    let h = grid.spacing();
    let mut sum = 0.0;
    for node in 0..grid.len() {
        let v = state.node(node);
        for axis in 0..grid.dim() {
            let w = state.node(grid.neighbor(node, axis, 1));
            sum += crate::vector::dist(v, w).powi(2);
        }
    }
    0.5 * sum / (h * h) * grid.cell_volume()
}

/// Energies of `state`; `epsilon = ∞` drops the penalty term.
pub fn energy_record<M: EmbeddedManifold + ?Sized>(
    state: &FieldState,
    epsilon: f64,
    prev: Option<&FieldState>,
    manifold: &M,
) -> MonitorRecord {
    let vol = state.grid.cell_volume();
    let penalty = if epsilon.is_finite() {
        state.nodes().map(|v| manifold.penalty_potential(v)).sum::<f64>() * vol / epsilon
    } else {
        0.0
    };
    let max_dist = state.nodes().map(|v| manifold.dist(v)).fold(0.0, f64::max);
    let grad = discrete_gradient(state);
    let ml = state.ambient_dim * state.grid.dim();
    let max_gradient_sq = grad
        .chunks(ml)
        .map(|g| crate::vector::dot(g, g))
        .fold(0.0, f64::max);
    let (rate, step) = match prev {
        Some(p) => (time_derivative_rate(state, p), state.t - p.t),
        None => (0.0, 0.0),
    };
    MonitorRecord {
        t: state.t,
        dirichlet_energy: dirichlet_energy(state),
        penalty_energy: penalty,
        time_derivative_rate: rate,
        time_derivative_energy: rate * step,
        max_dist,
        max_gradient_sq,
    }
}

/// Fitted constant in `E(t) + ∫∫|∂_t v|² ≤ e^{Ct}(Ct + E(0))`: the smallest
/// `C` on a doubling search that satisfies the bound at every record.
pub fn fit_energy_growth(records: &[MonitorRecord]) -> f64 {
    let Some(first) = records.first() else { return 0.0 };
    let e0 = first.total_energy();
    let holds = |c: f64| {
        records.iter().all(|r| {
            let lhs = r.total_energy() + r.time_derivative_energy;
            lhs <= (c * r.t).exp() * (c * r.t + e0) * (1.0 + 1e-12) + 1e-12
        })
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

/// Largest relative per-step increase of the total energy.
pub fn max_relative_energy_increase(records: &[MonitorRecord]) -> f64 {
    records
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].total_energy(), w[1].total_energy());
            if a > 0.0 {
                (b - a) / a
            } else if b > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use crate::pde::{initialize_from_map, InitialMap, TorusGrid};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_has_zero_energies() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 32).unwrap();
        let st = FieldState::new(0.0, grid, 3, [0.0, 1.0, 0.0].repeat(32));
        let r = energy_record(&st, 1e-3, Some(&st.clone()), &s);
        assert_eq!(r.total_energy(), 0.0);
        assert_eq!(r.max_dist, 0.0);
        assert_eq!(r.max_gradient_sq, 0.0);
    }

    #[test]
    fn great_circle_dirichlet_energy() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 128).unwrap();
        let gc = InitialMap::GreatCircle { k: 1 };
        let st = initialize_from_map(|x| gc.evaluate(&s, x), grid, &s).unwrap();
        let r = energy_record(&st, 1e-3, None, &s);
        let exact = 2.0 * PI * PI;
        assert!((r.dirichlet_energy - exact).abs() / exact < 1e-3);
        assert!((r.dirichlet_energy - 19.739).abs() < 0.02);
        assert!(r.penalty_energy < 1e-20);
    }

    #[test]
    fn uniformly_pushed_field_penalty() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 16).unwrap();
        let st = FieldState::new(0.0, grid, 3, [1.1, 0.0, 0.0].repeat(16));
        let r = energy_record(&st, 0.01, None, &s);
        assert!((r.penalty_energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_fit_is_zero_for_decreasing_energy() {
        let rec = |t: f64, e: f64| MonitorRecord {
            t,
            dirichlet_energy: e,
            penalty_energy: 0.0,
            time_derivative_rate: 0.0,
            time_derivative_energy: 0.0,
            max_dist: 0.0,
            max_gradient_sq: 0.0,
        };
        assert_eq!(fit_energy_growth(&[rec(0.0, 2.0), rec(0.1, 1.5)]), 0.0);
        let c = fit_energy_growth(&[rec(0.0, 1.0), rec(1.0, 3.0)]);
        assert!(c > 0.0 && c.is_finite());
        assert!(((c).exp() * (c + 1.0) - 3.0).abs() < 1e-9);
        assert!(max_relative_energy_increase(&[rec(0.0, 1.0), rec(0.1, 1.5)]) > 0.49);
    }
}
