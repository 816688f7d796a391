use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::pde::{discrete_gradient, discrete_laplacian, FieldState};
use serde::{Deserialize, Serialize};

/// `e(v) = ½|∇v|² + (R²/ε) G(v)` per node.
pub fn bochner_density<M: EmbeddedManifold + ?Sized>(
    state: &FieldState,
    epsilon: f64,
    r_scale: f64,
    manifold: &M,
) -> Vec<f64> {
    let ml = state.ambient_dim * state.grid.dim();
    let grad = discrete_gradient(state);
    state
        .nodes()
        .zip(grad.chunks(ml))
        .map(|(v, g)| {
            let pen = if epsilon.is_finite() {
                r_scale * r_scale * manifold.penalty_potential(v) / epsilon
            } else {
                0.0
            };
            0.5 * crate::vector::dot(g, g) + pen
        })
        .collect()
}

/// Pointwise check of `(∂_t − ½Δ)e ≤ C e (R² + e)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    /// max over nodes with `e > 1e-10` of `(∂_t − ½Δ)e / (e (R² + e))`.
    pub max_ratio: f64,
    pub max_density: f64,
    pub nodes_checked: usize,
}

pub fn bochner_report<M: EmbeddedManifold + ?Sized>(
    state: &FieldState,
    prev: &FieldState,
    epsilon: f64,
    r_scale: f64,
    manifold: &M,
) -> BochnerReport {
    let e_now = bochner_density(state, epsilon, r_scale, manifold);
    let e_prev = bochner_density(prev, epsilon, r_scale, manifold);
    let dt = state.t - prev.t;
    let density_state = FieldState::new(state.t, state.grid, 1, e_now.clone());
    let lap = discrete_laplacian(&density_state);
    let mut report = BochnerReport {
        max_ratio: f64::NEG_INFINITY,
        max_density: e_now.iter().copied().fold(0.0, f64::max),
        nodes_checked: 0,
    };
    for i in 0..e_now.len() {
        let e = e_now[i];
        if e <= 1e-10 {
            continue;
        }
        let heat = (e_now[i] - e_prev[i]) / dt - 0.5 * lap[i];
        let ratio = heat / (e * (r_scale * r_scale + e));
        report.max_ratio = report.max_ratio.max(ratio);
        report.nodes_checked += 1;
    }
    if report.nodes_checked == 0 {
        report.max_ratio = 0.0;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use crate::pde::{initialize_from_map, InitialMap, TorusGrid};
    use std::f64::consts::PI;

    #[test]
    fn constant_field_density_vanishes() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 16).unwrap();
        let st = FieldState::new(0.0, grid, 3, [0.0, 0.0, 1.0].repeat(16));
        assert!(bochner_density(&st, 1e-3, 1.0, &s).iter().all(|&e| e == 0.0));
    }

    #[test]
    fn great_circle_density() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 128).unwrap();
        let gc = InitialMap::GreatCircle { k: 1 };
        let st = initialize_from_map(|x| gc.evaluate(&s, x), grid, &s).unwrap();
        for e in bochner_density(&st, 1e-3, 1.0, &s) {
            assert!((e - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < 1e-3);
        }
    }
}
