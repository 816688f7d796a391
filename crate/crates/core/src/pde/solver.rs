//! Time integration of the penalized flow
//! `∂_t v − ½Δv = −(1/2ε) g(v) + f̄(v, ∇v)` and of the intrinsic flow
//! `∂_t v − ½∂²v = −½ Ā(v)(∂v, ∂v) + f̄(v, ∂v)` on the periodic grid.

use super::field::{FieldState, Flow, Trajectory};
use super::grid::TorusGrid;
use super::stencil::{discrete_gradient, discrete_laplacian};
use crate::diagnostics::{energy_record, time_derivative_rate};
use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::vector::AmbientVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Below this many nodes a step runs on the calling thread.
const PARALLEL_MIN_NODES: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Explicit heat and driver terms, penalty relaxed exactly toward the
    /// foot point.
    #[default]
    Imex,
    /// Everything explicit.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub scheme: Scheme,
    /// Keep every `record_stride`-th state.
    pub record_stride: usize,
    /// Emit a monitor record every `monitor_stride` steps.
    pub monitor_stride: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            scheme: Scheme::Imex,
            record_stride: 1,
            monitor_stride: 1,
        }
    }
}

/// Largest stable step: `0.9·min(Δx²/2m, ε/4)` explicit, `0.9·Δx²/2m` IMEX.
pub fn cfl_max_dt(grid: &TorusGrid, epsilon: f64, scheme: Scheme) -> f64 {
    let h = grid.spacing();
    let diffusive = h * h / (2.0 * grid.dim() as f64);
    match scheme {
        Scheme::Imex => 0.9 * diffusive,
        Scheme::Explicit => 0.9 * diffusive.min(epsilon / 4.0),
    }
}

fn check_cfl(dt: f64, limit: f64) -> Result<()> {
    if dt > 0.0 && dt <= limit * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::CflViolated { dt, limit })
    }
}

fn map_nodes<F>(n: usize, f: F) -> Result<Vec<AmbientVector>>
where
    F: Fn(usize) -> Result<AmbientVector> + Sync + Send,
{
    let results: Vec<Result<AmbientVector>> = if n >= PARALLEL_MIN_NODES {
        (0..n).into_par_iter().map(&f).collect()
    } else {
        (0..n).map(&f).collect()
    };
    results.into_iter().collect()
}

fn assemble(prev: &FieldState, t: f64, nodes: Vec<AmbientVector>) -> FieldState {
    let values = nodes.into_iter().flat_map(|v| v.into_vec()).collect();
    FieldState::new(t, prev.grid, prev.ambient_dim, values)
}

/// Exact solution of `dv/dt = −(1/ε)(v − P_N(v))` over `dt` with the foot
/// point frozen, for one node inside the inner tube; explicit
/// `v − (dt/2ε) g(v)` outside it.
pub fn relax_node<M: EmbeddedManifold + ?Sized>(manifold: &M, v: AmbientVector, epsilon: f64, dt: f64) -> AmbientVector {
    let d = manifold.dist(&v);
    if d == 0.0 {
        return v;
    }
    if d < manifold.tube_radius() {
        if let Some(q) = manifold.nearest_point(&v) {
            let decay = (-dt / epsilon).exp();
            let offset = v - &q[..];
            return q + &offset.scale(decay)[..];
        }
    }
    let g = manifold.penalty_gradient(&v);
    let mut out = v;
    out.axpy(-dt / (2.0 * epsilon), &g);
    out
}

/// Applies [`relax_node`] at every node.
pub fn relax_penalty<M: EmbeddedManifold + ?Sized>(state: &FieldState, epsilon: f64, dt: f64, manifold: &M) -> FieldState {
    let nodes = state
        .nodes()
        .map(|v| relax_node(manifold, AmbientVector::from_slice(v), epsilon, dt))
        .collect();
    assemble(state, state.t + dt, nodes)
}

fn check_tube<M: EmbeddedManifold + ?Sized>(manifold: &M, state: &FieldState) -> Result<()> {
    let limit = 3.0 * manifold.tube_radius();
    for (node, v) in state.nodes().enumerate() {
        let d = manifold.dist(v);
        if !(d < limit) {
            return Err(Error::NodeLeftTube { node, t: state.t, dist: d });
        }
    }
    Ok(())
}

fn check_bounded<M: EmbeddedManifold + ?Sized>(manifold: &M, state: &FieldState) -> Result<()> {
    let cap = 10.0 * (1.0 + manifold.extent());
    for v in state.nodes() {
        let norm = crate::vector::norm(v);
        if !(norm <= cap) {
            return Err(Error::Diverged { t: state.t, norm });
        }
    }
    Ok(())
}

/// One step of the penalized flow.
pub fn step_penalized<M: EmbeddedManifold + ?Sized>(
    state: &FieldState,
    epsilon: f64,
    dt: f64,
    generator: &Generator,
    manifold: &M,
    scheme: Scheme,
) -> Result<FieldState> {
    if !(epsilon > 0.0) {
        return Err(Error::ConfigInvalid(format!("penalty parameter {epsilon} must be positive")));
    }
    check_cfl(dt, cfl_max_dt(&state.grid, epsilon, scheme))?;
    let l = state.ambient_dim;
    let ml = l * state.grid.dim();
    let lap = discrete_laplacian(state);
    let grad = if generator.is_zero() { Vec::new() } else { discrete_gradient(state) };
    let nodes = map_nodes(state.grid.len(), |node| {
        let v = state.node(node);
        let mut next = AmbientVector::from_slice(v);
        next.axpy(0.5 * dt, &lap[node * l..(node + 1) * l]);
        if !generator.is_zero() {
            let f = generator.eval_extended(manifold, v, &grad[node * ml..(node + 1) * ml]);
            next.axpy(dt, &f);
        }
        Ok(match scheme {
            Scheme::Imex => relax_node(manifold, next, epsilon, dt),
            Scheme::Explicit => {
                next.axpy(-dt / (2.0 * epsilon), &manifold.penalty_gradient(v));
                next
            }
        })
    })?;
    let out = assemble(state, state.t + dt, nodes);
    check_tube(manifold, &out)?;
    Ok(out)
}

/// One explicit step of the intrinsic flow followed by projection onto `N`.
pub fn step_intrinsic_m1<M: EmbeddedManifold + ?Sized>(
    state: &FieldState,
    dt: f64,
    generator: &Generator,
    manifold: &M,
) -> Result<FieldState> {
    if state.grid.dim() != 1 {
        return Err(Error::ConfigInvalid("the intrinsic solver needs m = 1".into()));
    }
    check_cfl(dt, cfl_max_dt(&state.grid, f64::INFINITY, Scheme::Imex))?;
    let l = state.ambient_dim;
    let lap = discrete_laplacian(state);
    let grad = discrete_gradient(state);
    let t_next = state.t + dt;
    let nodes = map_nodes(state.grid.len(), |node| {
        let v = state.node(node);
        let dv = &grad[node * l..(node + 1) * l];
        let mut next = AmbientVector::from_slice(v);
        next.axpy(0.5 * dt, &lap[node * l..(node + 1) * l]);
        next.axpy(-0.5 * dt, &manifold.extended_sff(v, dv));
        if !generator.is_zero() {
            next.axpy(dt, &generator.eval_extended(manifold, v, dv));
        }
        if !(manifold.dist(&next) < 3.0 * manifold.tube_radius()) {
            return Err(Error::ProjectionOutsideTube { node, t: t_next });
        }
        manifold
            .nearest_point(&next)
            .ok_or(Error::ProjectionOutsideTube { node, t: t_next })
    })?;
    Ok(assemble(state, t_next, nodes))
}

fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::ConfigInvalid(format!("need dt > 0 and T ≥ 0, got dt = {dt}, T = {t_final}")));
    }
    let k = (t_final / dt).round();
    if (k * dt - t_final).abs() > 1e-12 * t_final.max(1.0) {
        return Err(Error::ConfigInvalid(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(k as usize)
}

fn integrate<M, S>(
    initial: &FieldState,
    t_final: f64,
    dt: f64,
    flow: Flow,
    generator: &Generator,
    manifold: &M,
    opts: &SolverOptions,
    step: S,
) -> Result<Trajectory>
where
    M: EmbeddedManifold + ?Sized,
    S: Fn(&FieldState) -> Result<FieldState>,
{
    let steps = step_count(t_final, dt)?;
    let stride = opts.record_stride.max(1);
    if steps % stride != 0 {
        return Err(Error::ConfigInvalid(format!(
            "record stride {stride} does not divide the {steps} steps"
        )));
    }
    let epsilon = match flow {
        Flow::Penalized { epsilon } => epsilon,
        Flow::Intrinsic => f64::INFINITY,
    };
    let monitor_stride = opts.monitor_stride.max(1);
    let mut current = initial.clone();
    current.t = 0.0;
    let mut states = vec![current.clone()];
    let mut monitors = vec![energy_record(&current, epsilon, None, manifold)];
    let mut accumulated = 0.0;
    for k in 1..=steps {
        let mut next = step(&current)?;
        next.t = k as f64 * dt;
        check_bounded(manifold, &next)?;
        accumulated += time_derivative_rate(&next, &current) * dt;
        if k % monitor_stride == 0 {
            let mut rec = energy_record(&next, epsilon, Some(&current), manifold);
            rec.time_derivative_energy = accumulated;
            monitors.push(rec);
        }
        if k % stride == 0 {
            states.push(next.clone());
        }
        current = next;
    }
    Ok(Trajectory {
        flow,
        dt,
        record_dt: dt * stride as f64,
        generator_id: generator.id().to_string(),
        manifold_id: manifold.id().to_string(),
        states,
        monitors,
    })
}

/// Integrates the penalized flow from `initial` up to `t_final`.
pub fn solve_penalized<M: EmbeddedManifold + ?Sized>(
    initial: &FieldState,
    epsilon: f64,
    t_final: f64,
    dt: f64,
    generator: &Generator,
    manifold: &M,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate(
        initial,
        t_final,
        dt,
        Flow::Penalized { epsilon },
        generator,
        manifold,
        opts,
        |s| step_penalized(s, epsilon, dt, generator, manifold, opts.scheme),
    )
}

/// Integrates the intrinsic m = 1 flow from `initial` up to `t_final`.
pub fn solve_intrinsic_m1<M: EmbeddedManifold + ?Sized>(
    initial: &FieldState,
    t_final: f64,
    dt: f64,
    generator: &Generator,
    manifold: &M,
    opts: &SolverOptions,
) -> Result<Trajectory> {
    integrate(
        initial,
        t_final,
        dt,
        Flow::Intrinsic,
        generator,
        manifold,
        opts,
        |s| step_intrinsic_m1(s, dt, generator, manifold),
    )
}

/// Space-L² deviation of penalized runs from the intrinsic reference at
/// each recorded reference time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverComparison {
    pub times: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `deviations[e][k]`: ε = `epsilons[e]` at `times[k]`.
    pub deviations: Vec<Vec<f64>>,
}

impl SolverComparison {
    /// Largest deviation over time for each ε.
    pub fn max_deviation(&self) -> Vec<f64> {
        self.deviations.iter().map(|d| d.iter().copied().fold(0.0, f64::max)).collect()
    }

    /// Whether the worst-case deviation decreases along the ε list, allowing
    /// `slack` relative growth between neighbours.
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        let m = self.max_deviation();
        m.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack) + 1e-14)
    }
}

fn l2_distance(a: &FieldState, b: &FieldState) -> f64 {
    let vol = a.grid.cell_volume();
    let sum: f64 = a
        .nodes()
        .zip(b.nodes())
        .map(|(x, y)| {
            let d = crate::vector::dist(x, y);
            d * d
        })
        .sum();
    (sum * vol).sqrt()
}

/// Runs the intrinsic reference and a penalized run per ε on the same grid
/// and step, recording L² deviations at the reference record times.
pub fn compare_solvers<M: EmbeddedManifold + ?Sized>(
    initial: &FieldState,
    t_final: f64,
    dt: f64,
    epsilons: &[f64],
    generator: &Generator,
    manifold: &M,
    opts: &SolverOptions,
) -> Result<SolverComparison> {
    let reference = solve_intrinsic_m1(initial, t_final, dt, generator, manifold, opts)?;
    let mut deviations = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        let run = solve_penalized(initial, eps, t_final, dt, generator, manifold, opts)?;
        deviations.push(
            reference
                .states
                .iter()
                .zip(&run.states)
                .map(|(r, p)| l2_distance(r, p))
                .collect(),
        );
    }
    Ok(SolverComparison {
        times: reference.times(),
        epsilons: epsilons.to_vec(),
        deviations,
    })
}
