//! Finite-difference solvers for the penalized and intrinsic heat flows on
//! the periodic torus, plus trajectory storage and export.

pub mod export;
mod field;
mod grid;
mod initial;
mod solver;
mod stencil;

pub use field::{FieldInterpolator, FieldState, Flow, Trajectory};
pub use grid::TorusGrid;
pub use initial::{initialize_from_map, InitialMap};
pub use solver::{
    cfl_max_dt, compare_solvers, relax_node, relax_penalty, solve_intrinsic_m1, solve_penalized, step_intrinsic_m1,
    step_penalized, Scheme, SolverComparison, SolverOptions,
};
pub use stencil::{discrete_gradient, discrete_laplacian};
