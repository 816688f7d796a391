//! Manifold-valued backward SDEs through penalized heat flows.
//!
//! The pipeline: solve the penalized (or intrinsic) heat flow
//! `∂_t v = ½Δv − (1/2ε)∇G(v) + f̄(v, ∇v)` on the torus `T^m` with a
//! compact target `N ⊂ R^L`, read `Y_t = v(T − t, B_t + x)` and
//! `Z_t = ∇_x v(T − t, B_t + x)` off the solved field along Brownian paths,
//! then check what the construction promises: `Y` stays on `N`, `Z` is
//! tangent, the backward equation holds, and `g(Y)` corrected by its
//! Hessian drift is a martingale.

pub mod bsde;
pub mod diagnostics;
mod error;
pub mod experiment;
pub mod generators;
pub mod geometry;
pub mod pde;
pub mod vector;

pub use error::{Error, Result};
pub use generators::Generator;
pub use geometry::{manifold_by_id, EmbeddedManifold, ManifoldOps};
pub use vector::AmbientVector;
