use super::grid::TorusGrid;
use super::stencil::discrete_gradient;
use crate::diagnostics::MonitorRecord;
use crate::error::{Error, Result};
use crate::vector::AmbientVector;
use serde::{Deserialize, Serialize};

/// Grid values of `v(t, ·) : T^m → R^L`, stored node-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub t: f64,
    pub grid: TorusGrid,
    pub ambient_dim: usize,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn new(t: f64, grid: TorusGrid, ambient_dim: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len() * ambient_dim);
        FieldState {
            t,
            grid,
            ambient_dim,
            values,
        }
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i * self.ambient_dim..(i + 1) * self.ambient_dim]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.ambient_dim)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    /// Largest nodal difference to another state on the same grid.
    pub fn sup_distance(&self, other: &FieldState) -> f64 {
        self.nodes()
            .zip(other.nodes())
            .map(|(a, b)| crate::vector::dist(a, b))
            .fold(0.0, f64::max)
    }
}

/// Which equation produced a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Flow {
    Penalized { epsilon: f64 },
    Intrinsic,
}

/// Recorded states `t_0 = 0 < … < t_K = T` of one solver run, uniformly
/// spaced by `record_dt`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub flow: Flow,
    /// Solver step.
    pub dt: f64,
    /// Spacing of the recorded states (a multiple of `dt`).
    pub record_dt: f64,
    pub generator_id: String,
    pub manifold_id: String,
    pub states: Vec<FieldState>,
    pub monitors: Vec<MonitorRecord>,
}

impl Trajectory {
    pub fn grid(&self) -> TorusGrid {
        self.states[0].grid
    }

    pub fn ambient_dim(&self) -> usize {
        self.states[0].ambient_dim
    }

    pub fn final_time(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self.flow {
            Flow::Penalized { epsilon } => Some(epsilon),
            Flow::Intrinsic => None,
        }
    }

    /// Recorded state nearest to `t`.
    pub fn nearest_state(&self, t: f64) -> &FieldState {
        let k = ((t / self.record_dt).round().max(0.0) as usize).min(self.states.len() - 1);
        &self.states[k]
    }

    pub fn interpolator(&self) -> FieldInterpolator<'_> {
        FieldInterpolator::new(self)
    }
}

/// Space-time reconstruction of `v` and `∇_x v` from a trajectory: linear
/// in `t`, multilinear in `x`. Gradients come from the central-difference
/// stencil at each recorded state.
pub struct FieldInterpolator<'a> {
    traj: &'a Trajectory,
    gradients: Vec<Vec<f64>>,
}

/// Time-snapping tolerance, relative to the record spacing.
const SNAP: f64 = 1e-9;

impl<'a> FieldInterpolator<'a> {
    pub fn new(traj: &'a Trajectory) -> Self {
        let gradients = traj.states.iter().map(discrete_gradient).collect();
        FieldInterpolator { traj, gradients }
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.traj
    }

    fn time_bracket(&self, t: f64) -> Result<(usize, f64)> {
        let k_max = self.traj.states.len() - 1;
        let s = t / self.traj.record_dt;
        if s < -SNAP || s > k_max as f64 + SNAP {
            return Err(Error::GridMismatch(format!(
                "time {t} outside the recorded range [0, {}]",
                self.traj.final_time()
            )));
        }
        let r = s.round();
        if (s - r).abs() <= SNAP {
            return Ok(((r as usize).min(k_max), 0.0));
        }
        let k = (s.floor() as usize).min(k_max.saturating_sub(1));
        Ok((k, s - k as f64))
    }

    // Corner nodes and fractional offsets of the cell containing x.
    fn cell(&self, x: &[f64]) -> ([usize; 4], [f64; 2]) {
        let grid = self.traj.grid();
        let n = grid.nodes_per_axis();
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for a in 0..grid.dim() {
            let s = x[a].rem_euclid(1.0) * n as f64;
            let fl = s.floor();
            base[a] = (fl as usize) % n;
            frac[a] = s - fl;
        }
        let i1 = (base[0] + 1) % n;
        if grid.dim() == 1 {
            ([base[0], i1, 0, 0], frac)
        } else {
            let j1 = (base[1] + 1) % n;
            let idx = |i, j| grid.flat_index([i, j]);
            ([idx(base[0], base[1]), idx(i1, base[1]), idx(base[0], j1), idx(i1, j1)], frac)
        }
    }

    // Multilinear reconstruction written as nested lerps `a + f(b − a)`, so
    // that constant data is reproduced exactly.
    fn lerp_cell(&self, data: &[f64], width: usize, corners: &[usize; 4], frac: [f64; 2], out: &mut [f64]) {
        let at = |node: usize, c: usize| data[node * width + c];
        let lerp = |a: f64, b: f64, f: f64| if f == 0.0 { a } else { a + f * (b - a) };
        for c in 0..width {
            let lo = lerp(at(corners[0], c), at(corners[1], c), frac[0]);
            out[c] = if self.traj.grid().dim() == 1 {
                lo
            } else {
                let hi = lerp(at(corners[2], c), at(corners[3], c), frac[0]);
                lerp(lo, hi, frac[1])
            };
        }
    }

    fn reconstruct(&self, t: f64, x: &[f64], with_gradient: bool) -> Result<(AmbientVector, AmbientVector)> {
        let (k, wt) = self.time_bracket(t)?;
        let l = self.traj.ambient_dim();
        let ml = l * self.traj.grid().dim();
        let (corners, frac) = self.cell(x);
        let mut y = AmbientVector::zeros(l);
        let mut z = AmbientVector::zeros(if with_gradient { ml } else { 0 });
        self.lerp_cell(&self.traj.states[k].values, l, &corners, frac, &mut y);
        if with_gradient {
            self.lerp_cell(&self.gradients[k], ml, &corners, frac, &mut z);
        }
        if wt > 0.0 {
            let mut y1 = AmbientVector::zeros(l);
            self.lerp_cell(&self.traj.states[k + 1].values, l, &corners, frac, &mut y1);
            for (a, b) in y.iter_mut().zip(y1.iter()) {
                *a += wt * (b - *a);
            }
            if with_gradient {
                let mut z1 = AmbientVector::zeros(ml);
                self.lerp_cell(&self.gradients[k + 1], ml, &corners, frac, &mut z1);
                for (a, b) in z.iter_mut().zip(z1.iter()) {
                    *a += wt * (b - *a);
                }
            }
        }
        Ok((y, z))
    }

    /// `(v(t, x), ∇_x v(t, x))`; the gradient is returned axis-major,
    /// `m·L` entries.
    pub fn eval(&self, t: f64, x: &[f64]) -> Result<(AmbientVector, AmbientVector)> {
        self.reconstruct(t, x, true)
    }

    /// `v(t, x)` only.
    pub fn value(&self, t: f64, x: &[f64]) -> Result<AmbientVector> {
        Ok(self.reconstruct(t, x, false)?.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use crate::pde::{initialize_from_map, InitialMap};
    use std::f64::consts::PI;

    fn trajectory(states: Vec<FieldState>, record_dt: f64) -> Trajectory {
        Trajectory {
            flow: Flow::Intrinsic,
            dt: record_dt,
            record_dt,
            generator_id: "zero".into(),
            manifold_id: "sphere2".into(),
            states,
            monitors: Vec::new(),
        }
    }

    fn circle(n: usize, t: f64) -> FieldState {
        let s2 = Sphere::new(3);
        let h = InitialMap::GreatCircle { k: 1 };
        let mut s = initialize_from_map(|x| h.evaluate(&s2, x), TorusGrid::new(1, n).unwrap(), &s2).unwrap();
        s.t = t;
        s
    }

    #[test]
    fn reproduces_nodes_and_constants_exactly() {
        let traj = trajectory(vec![circle(16, 0.0), circle(16, 0.1)], 0.1);
        let field = traj.interpolator();
        for i in 0..16 {
            let x = i as f64 / 16.0;
            assert_eq!(&field.value(0.03, &[x]).unwrap()[..], traj.states[0].node(i));
        }
        let grid = TorusGrid::new(2, 8).unwrap();
        let c = |t| FieldState::new(t, grid, 3, [0.3, -0.1, 0.7].repeat(64));
        let traj = trajectory(vec![c(0.0), c(0.5)], 0.5);
        let field = traj.interpolator();
        let (y, z) = field.eval(0.123, &[0.377, 0.911]).unwrap();
        assert_eq!(&y[..], &[0.3, -0.1, 0.7]);
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn periodic_in_space() {
        let traj = trajectory(vec![circle(16, 0.0)], 0.1);
        let field = traj.interpolator();
        let a = field.eval(0.0, &[0.3]).unwrap();
        let b = field.eval(0.0, &[-0.7]).unwrap();
        let c = field.eval(0.0, &[2.3]).unwrap();
        for (u, v) in a.0.iter().zip(b.0.iter()).chain(a.0.iter().zip(c.0.iter())) {
            assert!((u - v).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_in_time_between_records() {
        let mut s1 = circle(8, 0.2);
        for v in s1.values.iter_mut() {
            *v *= 2.0;
        }
        let traj = trajectory(vec![circle(8, 0.0), s1], 0.2);
        let y = traj.interpolator().value(0.05, &[0.0]).unwrap();
        assert!((y[0] - 1.25).abs() < 1e-14);
    }

    #[test]
    fn gradient_of_the_circle() {
        let n = 256;
        let traj = trajectory(vec![circle(n, 0.0)], 0.1);
        let (_, z) = traj.interpolator().eval(0.0, &[0.0]).unwrap();
        let exact = (2.0 * PI / n as f64).sin() * n as f64;
        assert!((z[1] - exact).abs() < 1e-9, "{} vs {exact}", z[1]);
        assert!(z[0].abs() < 1e-12);
    }

    #[test]
    fn rejects_times_outside_the_record() {
        let traj = trajectory(vec![circle(8, 0.0), circle(8, 0.1)], 0.1);
        let field = traj.interpolator();
        assert!(field.value(0.1 + 1e-12, &[0.0]).is_ok());
        assert!(matches!(field.value(0.2, &[0.0]), Err(Error::GridMismatch(_))));
        assert!(field.value(-0.01, &[0.0]).is_err());
    }
}
