use super::{fd, EmbeddedManifold, ManifoldOps};
use crate::vector::{dot, AmbientVector};
use serde::{Deserialize, Serialize};

/// Sampled check of the lower bound
/// `∇̄²G(p)(u,u) + ⟨g(p), Ā(p)(u,u) − 2f̄(p,u)⟩ ≥ −c·G(p)(1+|u|²)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct KeyInequalityReport {
    pub samples: usize,
    pub off_manifold_samples: usize,
    /// min over off-manifold samples of LHS / (G (1 + |u|²)), with `Ā`
    /// evaluated through the projection Hessian at `P_N(p)`.
    pub min_ratio: f64,
    /// Same ratio with the projection Hessian taken at `p` itself.
    pub min_ratio_hessian_at_p: f64,
    /// max |⟨g(p), f̄(p,u)⟩| over samples inside the tube.
    pub max_generator_overlap: f64,
    /// max |⟨g(p), w⟩| over an orthonormal basis `w` of `T_{P_N(p)}N`.
    pub max_tangent_overlap: f64,
    /// `max(0, −min_ratio)`: the empirical constant in the lower bound.
    pub c_hat: f64,
}

impl KeyInequalityReport {
    pub fn orthogonality_holds(&self, tol: f64) -> bool {
        self.max_generator_overlap <= tol && self.max_tangent_overlap <= tol
    }
}

/// Evaluates the key-inequality ingredients on every `(p, u)` pair.
pub fn verify_key_inequality<M>(
    manifold: &M,
    extended_generator: &dyn Fn(&[f64], &[f64]) -> AmbientVector,
    points: &[AmbientVector],
    vectors: &[AmbientVector],
) -> KeyInequalityReport
where
    M: EmbeddedManifold + ?Sized,
{
    let mut report = KeyInequalityReport {
        min_ratio: f64::INFINITY,
        min_ratio_hessian_at_p: f64::INFINITY,
        ..Default::default()
    };
    let tube = 3.0 * manifold.tube_radius();
    let outer = manifold.cutoff().outer_radius();
    for p in points {
        let g = manifold.penalty_gradient(p);
        let gp = manifold.penalty_potential(p);
        let d = manifold.dist(p);
        if d < tube {
            if let Ok(basis) = manifold.project(p).and_then(|q| manifold.tangent_basis(&q)) {
                for w in basis {
                    report.max_tangent_overlap = report.max_tangent_overlap.max(dot(&g, &w).abs());
                }
            }
        }
        for u in vectors {
            report.samples += 1;
            let fbar = extended_generator(p, u);
            if d < tube {
                report.max_generator_overlap = report.max_generator_overlap.max(dot(&g, &fbar).abs());
            }
            if gp <= 0.0 {
                continue;
            }
            report.off_manifold_samples += 1;
            let hess_g = fd::second_directional(|q| manifold.penalty_potential(q), p, u);
            let abar = manifold.extended_sff(p, u);
            let at_p = if d < outer {
                manifold.projection_hessian(p, u) * manifold.cutoff().phi(d)
            } else {
                AmbientVector::zeros(p.len())
            };
            let denom = gp * (1.0 + dot(u, u));
            let drift = |a: &[f64]| -> f64 {
                a.iter().zip(fbar.iter()).zip(g.iter()).map(|((ai, fi), gi)| gi * (ai - 2.0 * fi)).sum()
            };
            report.min_ratio = report.min_ratio.min((hess_g + drift(&abar)) / denom);
            report.min_ratio_hessian_at_p = report.min_ratio_hessian_at_p.min((hess_g + drift(&at_p)) / denom);
        }
    }
    if report.off_manifold_samples == 0 {
        report.min_ratio = 0.0;
        report.min_ratio_hessian_at_p = 0.0;
    }
    report.c_hat = (-report.min_ratio).max(0.0);
    report
}
