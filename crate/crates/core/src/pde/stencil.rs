//! Second-order periodic finite-difference stencils.

use super::field::FieldState;

/// Five-point (m = 2) / three-point (m = 1) Laplacian, node-major like the
/// input values.
pub fn discrete_laplacian(state: &FieldState) -> Vec<f64> {
    let grid = state.grid;
    let l = state.ambient_dim;
    let inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    let mut out = vec![0.0; state.values.len()];
    for node in 0..grid.len() {
        let centre = state.node(node);
        let dst = &mut out[node * l..(node + 1) * l];
        for axis in 0..grid.dim() {
            let fwd = state.node(grid.neighbor(node, axis, 1));
            let bwd = state.node(grid.neighbor(node, axis, -1));
            for k in 0..l {
                dst[k] += (fwd[k] - 2.0 * centre[k] + bwd[k]) * inv_h2;
            }
        }
    }
    out
}

/// Central-difference gradient, laid out `[node][axis][component]`.
pub fn discrete_gradient(state: &FieldState) -> Vec<f64> {
    let grid = state.grid;
    let l = state.ambient_dim;
    let m = grid.dim();
    let inv_2h = 0.5 / grid.spacing();
    let mut out = vec![0.0; grid.len() * m * l];
    for node in 0..grid.len() {
        for axis in 0..m {
            let fwd = state.node(grid.neighbor(node, axis, 1));
            let bwd = state.node(grid.neighbor(node, axis, -1));
            let base = (node * m + axis) * l;
            for k in 0..l {
                out[base + k] = (fwd[k] - bwd[k]) * inv_2h;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::TorusGrid;
    use std::f64::consts::PI;

    fn circle_state(n: usize, k: f64) -> FieldState {
        let grid = TorusGrid::new(1, n).unwrap();
        let values = (0..n)
            .flat_map(|i| {
                let x = i as f64 / n as f64;
                [(2.0 * PI * k * x).cos(), (2.0 * PI * k * x).sin(), 0.0]
            })
            .collect();
        FieldState::new(0.0, grid, 3, values)
    }

    #[test]
    fn constants_have_zero_derivatives() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let s = FieldState::new(0.0, grid, 3, [0.0, 0.0, 1.0].repeat(64));
        assert!(discrete_laplacian(&s).iter().all(|&x| x == 0.0));
        assert!(discrete_gradient(&s).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn great_circle_laplacian_is_second_order() {
        let mut errs = vec![];
        for n in [64, 128, 256] {
            let s = circle_state(n, 1.0);
            let lap = discrete_laplacian(&s);
            let err = (0..n * 3)
                .map(|i| (lap[i] + 4.0 * PI * PI * s.values[i]).abs())
                .fold(0.0, f64::max)
                / (4.0 * PI * PI);
            errs.push(err);
        }
        assert!(errs[1] <= 1e-3, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.9 && errs[1] / errs[2] > 3.9);
    }

    #[test]
    fn great_circle_gradient_norm() {
        let n = 128;
        let s = circle_state(n, 1.0);
        let g = discrete_gradient(&s);
        for node in 0..n {
            let norm = crate::vector::norm(&g[node * 3..node * 3 + 3]);
            assert!((norm - 2.0 * PI).abs() / (2.0 * PI) <= 1e-3);
        }
    }

    #[test]
    fn bump_laplacian_sums_to_zero() {
        let grid = TorusGrid::new(2, 12).unwrap();
        let values = (0..grid.len())
            .flat_map(|i| {
                let [x, y] = grid.coords(i);
                let r2 = (x - 0.5).powi(2) + (y - 0.4).powi(2);
                [(-30.0 * r2).exp(), 0.0]
            })
            .collect();
        let s = FieldState::new(0.0, grid, 2, values);
        let total: f64 = discrete_laplacian(&s).iter().sum();
        assert!(total.abs() < 1e-9);
    }

    #[test]
    fn ramp_gradient_error_sits_at_the_seam() {
        let n = 32;
        let grid = TorusGrid::new(1, n).unwrap();
        let values: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let s = FieldState::new(0.0, grid, 1, values);
        let g = discrete_gradient(&s);
        assert!(g.iter().all(|x| x.is_finite()));
        let worst = g
            .iter()
            .enumerate()
            .max_by(|a, b| (a.1 - 1.0).abs().total_cmp(&(b.1 - 1.0).abs()))
            .unwrap()
            .0;
        assert!(worst == 0 || worst == n - 1);
        assert!((g[n / 2] - 1.0).abs() < 1e-12);
    }
}
