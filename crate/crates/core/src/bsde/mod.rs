//! Brownian paths, `(Y, Z)` assembly from a solved field, and the checks run
//! on the assembled pairs.

mod assembly;
mod brownian;
mod ensemble;
mod martingale;
mod residual;

pub use assembly::{assemble_bsde_sample, BsdeSample};
pub use brownian::{path_seed, sample_brownian, standard_normal_at, step_count, BrownianPath};
pub use ensemble::{
    residual_refinement, run_ensemble, EnsembleReport, EnsembleSpec, PathSummary, ResidualRefinement,
    StartPoints,
};
pub use martingale::{
    checkpoint_stats, martingale_path, martingale_test, CheckpointStat, CurvatureDrift, MartingaleStats, Observable, MIN_PATHS, Z_THRESHOLD,
};
pub use residual::{bsde_residual, flag_outliers, on_manifold_defect, tangency_defect, weak_residual, ResidualLedger};
