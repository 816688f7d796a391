//! Submanifolds `N ⊂ R^L`: nearest-point projection, distance, tangent and
//! normal splitting, second fundamental form, and the penalty potential.
//!
//! A manifold implementation only has to supply the projection and the
//! distance function. Everything else has a finite-difference default that
//! closed-form manifolds (spheres, the flat torus) override.

mod cutoff;
pub mod fd;
mod key_inequality;
mod sphere;
mod torus;

pub use cutoff::CutoffProfile;
pub use key_inequality::{verify_key_inequality, KeyInequalityReport};
pub use sphere::Sphere;
pub use torus::FlatTorus;

use crate::error::{Error, Result};
use crate::vector::{dot, norm, AmbientVector};
use std::sync::Arc;

/// Distance below which a point counts as lying on `N`.
pub const ON_MANIFOLD_TOL: f64 = 1e-9;
/// Tolerance for the normal part of a vector declared tangent.
pub const TANGENCY_TOL: f64 = 1e-9;

/// A compact submanifold of Euclidean space with a smooth projection tube.
pub trait EmbeddedManifold: Send + Sync {
    fn id(&self) -> &str;

    fn ambient_dim(&self) -> usize;

    fn intrinsic_dim(&self) -> usize;

    /// `δ0`: the projection and `dist²` are smooth on `B(N, 3δ0)`.
    fn tube_radius(&self) -> f64;

    /// Upper bound for `|q|`, `q ∈ N`.
    fn extent(&self) -> f64;

    /// Nearest point on `N`, without any tube check. `None` where the nearest
    /// point is not unique.
    fn nearest_point(&self, p: &[f64]) -> Option<AmbientVector>;

    /// Euclidean distance to `N`; defined everywhere.
    fn dist(&self, p: &[f64]) -> f64;

    /// Whether [`nearest_point`](Self::nearest_point) is exact everywhere
    /// off the medial axis, so that projection need not be confined to the
    /// `3δ0` tube.
    fn has_global_projection(&self) -> bool {
        false
    }

    /// `Σ ∂²P_N/∂p_i∂p_j (q) u_i u_j` at a tube point `q`.
    fn projection_hessian(&self, q: &[f64], u: &[f64]) -> AmbientVector {
        fd::projection_hessian(self, q, u)
    }

    /// `DP_N(q) v`. On `N` this is the orthogonal projection onto `T_qN`.
    fn projection_jacobian(&self, q: &[f64], v: &[f64]) -> AmbientVector {
        fd::projection_jacobian(self, q, v)
    }

    /// `A(p)(u, w)` for `p ∈ N` and tangent `u, w`, without argument checks.
    /// Polarizes the projection Hessian by default.
    fn sff_unchecked(&self, p: &[f64], u: &[f64], w: &[f64]) -> AmbientVector {
        let plus: AmbientVector = u.iter().zip(w).map(|(a, b)| a + b).collect();
        let minus: AmbientVector = u.iter().zip(w).map(|(a, b)| a - b).collect();
        (self.projection_hessian(p, &plus) - self.projection_hessian(p, &minus)) * 0.25
    }

    fn cutoff(&self) -> CutoffProfile {
        CutoffProfile::new(self.tube_radius())
    }
}

/// How the extended second fundamental form treats its vector argument.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SffVariant {
    /// Evaluate the projection Hessian on the raw ambient vector.
    #[default]
    Raw,
    /// Project the vector onto `T_{P_N(p)}N` first.
    PreProjected,
}

/// Checked operations available on every [`EmbeddedManifold`].
pub trait ManifoldOps: EmbeddedManifold {
    /// `P_N(p)`. Fails wherever the projection may be non-unique: outside
    /// `B(N, 3δ0)` in general, only on the medial axis for manifolds with a
    /// global closed form.
    fn project(&self, p: &[f64]) -> Result<AmbientVector> {
        let d = self.dist(p);
        let limit = 3.0 * self.tube_radius();
        if !(d < limit) && !self.has_global_projection() {
            return Err(Error::OutsideTube { dist: d, limit });
        }
        self.nearest_point(p).ok_or(Error::OutsideTube { dist: d, limit })
    }

    fn ensure_on_manifold(&self, p: &[f64]) -> Result<()> {
        let d = self.dist(p);
        if d <= ON_MANIFOLD_TOL {
            Ok(())
        } else {
            Err(Error::NotOnManifold { dist: d })
        }
    }

    fn ensure_tangent(&self, p: &[f64], v: &[f64]) -> Result<()> {
        let vt = self.projection_jacobian(p, v);
        let normal = norm(&crate::vector::sub(v, &vt));
        if normal <= TANGENCY_TOL * norm(v).max(1.0) {
            Ok(())
        } else {
            Err(Error::NotTangent { normal })
        }
    }

    /// Tangential part `v^T` of `v` at `p ∈ N`.
    fn tangent_project(&self, p: &[f64], v: &[f64]) -> Result<AmbientVector> {
        self.ensure_on_manifold(p)?;
        Ok(self.projection_jacobian(p, v))
    }

    /// Normal part `v^⊥ = v − v^T` at `p ∈ N`.
    fn normal_project(&self, p: &[f64], v: &[f64]) -> Result<AmbientVector> {
        let vt = self.tangent_project(p, v)?;
        Ok(crate::vector::sub(v, &vt))
    }

    /// Orthonormal basis of `T_pN`.
    fn tangent_basis(&self, p: &[f64]) -> Result<Vec<AmbientVector>> {
        self.ensure_on_manifold(p)?;
        let l = self.ambient_dim();
        let mut basis: Vec<AmbientVector> = Vec::with_capacity(self.intrinsic_dim());
        for i in 0..l {
            let mut v = self.projection_jacobian(p, &AmbientVector::basis(l, i));
            for b in &basis {
                let c = dot(&v, b);
                v.axpy(-c, b);
            }
            let n = v.norm();
            if n > 1e-6 {
                basis.push(v.scale(1.0 / n));
            }
            if basis.len() == self.intrinsic_dim() {
                break;
            }
        }
        Ok(basis)
    }

    /// `A(p)(u, w) ∈ T_p^⊥N`.
    fn second_fundamental_form(&self, p: &[f64], u: &[f64], w: &[f64]) -> Result<AmbientVector> {
        self.ensure_on_manifold(p)?;
        self.ensure_tangent(p, u)?;
        self.ensure_tangent(p, w)?;
        Ok(self.sff_unchecked(p, u, w))
    }

    /// `Ā(p)(u, u)`, defined on all of `R^L`.
    fn extended_sff(&self, p: &[f64], u: &[f64]) -> AmbientVector {
        self.extended_sff_with(p, u, SffVariant::Raw)
    }

    fn extended_sff_with(&self, p: &[f64], u: &[f64], variant: SffVariant) -> AmbientVector {
        let cutoff = self.cutoff();
        let d = self.dist(p);
        if d >= cutoff.outer_radius() {
            return AmbientVector::zeros(self.ambient_dim());
        }
        let Some(q) = self.nearest_point(p) else {
            return AmbientVector::zeros(self.ambient_dim());
        };
        let weight = cutoff.phi(d);
        let h = match variant {
            SffVariant::Raw => self.projection_hessian(&q, u),
            SffVariant::PreProjected => {
                let ut = self.projection_jacobian(&q, u);
                self.projection_hessian(&q, &ut)
            }
        };
        h * weight
    }

    /// `G(p) = χ(dist²_N(p))`.
    fn penalty_potential(&self, p: &[f64]) -> f64 {
        let d = self.dist(p);
        self.cutoff().chi(d * d)
    }

    /// `g(p) = ∇̄G(p)`.
    fn penalty_gradient(&self, p: &[f64]) -> AmbientVector {
        let cutoff = self.cutoff();
        let d = self.dist(p);
        if d >= cutoff.outer_radius() || d == 0.0 {
            return AmbientVector::zeros(self.ambient_dim());
        }
        match self.nearest_point(p) {
            Some(q) => crate::vector::sub(p, &q) * (2.0 * cutoff.chi_prime(d * d)),
            None => AmbientVector::zeros(self.ambient_dim()),
        }
    }
}

impl<T: EmbeddedManifold + ?Sized> ManifoldOps for T {}

/// A manifold supplied only through its projection and distance functions.
pub struct CustomManifold {
    id: String,
    ambient_dim: usize,
    intrinsic_dim: usize,
    tube_radius: f64,
    extent: f64,
    project: Box<dyn Fn(&[f64]) -> Option<AmbientVector> + Send + Sync>,
    dist: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl CustomManifold {
    pub fn new(
        id: impl Into<String>,
        ambient_dim: usize,
        intrinsic_dim: usize,
        tube_radius: f64,
        extent: f64,
        project: impl Fn(&[f64]) -> Option<AmbientVector> + Send + Sync + 'static,
        dist: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert!(intrinsic_dim < ambient_dim && intrinsic_dim > 0);
        CustomManifold {
            id: id.into(),
            ambient_dim,
            intrinsic_dim,
            tube_radius,
            extent,
            project: Box::new(project),
            dist: Box::new(dist),
        }
    }
}

impl EmbeddedManifold for CustomManifold {
    fn id(&self) -> &str {
        &self.id
    }
    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }
    fn intrinsic_dim(&self) -> usize {
        self.intrinsic_dim
    }
    fn tube_radius(&self) -> f64 {
        self.tube_radius
    }
    fn extent(&self) -> f64 {
        self.extent
    }
    fn nearest_point(&self, p: &[f64]) -> Option<AmbientVector> {
        (self.project)(p)
    }
    fn dist(&self, p: &[f64]) -> f64 {
        (self.dist)(p)
    }
}

/// Looks up a built-in manifold: `circle` (S¹ ⊂ R²), `sphere2` (S² ⊂ R³),
/// `sphere3` (S³ ⊂ R⁴), `torus2` (S¹×S¹ ⊂ R⁴).
pub fn manifold_by_id(id: &str, delta0: Option<f64>) -> Result<Arc<dyn EmbeddedManifold>> {
    let m: Arc<dyn EmbeddedManifold> = match id {
        "circle" | "sphere1" => Arc::new(Sphere::new(2)),
        "sphere2" => Arc::new(Sphere::new(3)),
        "sphere3" => Arc::new(Sphere::new(4)),
        "torus2" => Arc::new(FlatTorus::new()),
        other => return Err(Error::NotFound(other.to_string())),
    };
    match delta0 {
        None => Ok(m),
        Some(d) if d > 0.0 && d <= sphere::MAX_TUBE_RADIUS => Ok(match id {
            "torus2" => Arc::new(FlatTorus::new().with_tube_radius(d)),
            _ => Arc::new(Sphere::new(m.ambient_dim()).with_tube_radius(d)),
        }),
        Some(d) => Err(Error::ConfigInvalid(format!(
            "tube radius {d} must lie in (0, {}]",
            sphere::MAX_TUBE_RADIUS
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s2() -> Sphere {
        Sphere::new(3)
    }

    #[test]
    fn projection_examples() {
        let m = s2();
        assert_eq!(&m.project(&[2.0, 0.0, 0.0]).unwrap()[..], &[1.0, 0.0, 0.0]);
        assert_eq!(&m.project(&[0.5, 0.0, 0.0]).unwrap()[..], &[1.0, 0.0, 0.0]);
        assert!(matches!(m.project(&[0.0, 0.0, 0.0]), Err(Error::OutsideTube { .. })));
    }

    #[test]
    fn distance_examples() {
        let m = s2();
        assert_eq!(m.dist(&[2.0, 0.0, 0.0]), 1.0);
        assert_eq!(m.dist(&[1.0, 0.0, 0.0]), 0.0);
        let d = m.dist(&[0.6, 0.8, 0.5]);
        assert_abs_diff_eq!(d, 1.25f64.sqrt() - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d, 0.118034, epsilon = 1e-6);
    }

    #[test]
    fn distance_matches_dense_sampling() {
        // brute-force min over a fine latitude/longitude net of S²
        let m = s2();
        let p = [0.6, 0.8, 0.5];
        let mut best = f64::INFINITY;
        let n = 600;
        for i in 0..=n {
            let theta = std::f64::consts::PI * i as f64 / n as f64;
            for j in 0..2 * n {
                let phi = std::f64::consts::PI * j as f64 / n as f64;
                let q = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
                best = best.min(crate::vector::dist(&p, &q));
            }
        }
        assert!((best - m.dist(&p)).abs() < 1e-4);
    }

    #[test]
    fn tangent_projection_examples() {
        let m = s2();
        let t = m.tangent_project(&[1.0, 0.0, 0.0], &[3.0, 1.0, 0.0]).unwrap();
        assert_eq!(&t[..], &[0.0, 1.0, 0.0]);
        let t = m.tangent_project(&[1.0, 0.0, 0.0], &[5.0, 0.0, 0.0]).unwrap();
        assert_eq!(&t[..], &[0.0, 0.0, 0.0]);
        let t = m.tangent_project(&[0.0, 0.0, 1.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(&t[..], &[1.0, 1.0, 0.0]);
        assert!(matches!(
            m.tangent_project(&[1.1, 0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::NotOnManifold { .. })
        ));
    }

    #[test]
    fn sff_examples() {
        let m = s2();
        let a = m
            .second_fundamental_form(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0])
            .unwrap();
        assert_eq!(&a[..], &[-1.0, 0.0, 0.0]);
        let a = m
            .second_fundamental_form(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0])
            .unwrap();
        assert_eq!(&a[..], &[0.0, 0.0, 0.0]);
        let a = m
            .second_fundamental_form(&[0.0, 0.6, 0.8], &[0.0; 3], &[1.0, 0.0, 0.0])
            .unwrap();
        assert_eq!(a.norm(), 0.0);
        assert!(matches!(
            m.second_fundamental_form(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]),
            Err(Error::NotTangent { .. })
        ));
        assert!(matches!(
            m.second_fundamental_form(&[1.2, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 1.0, 0.0]),
            Err(Error::NotOnManifold { .. })
        ));
    }

    #[test]
    fn sff_finite_difference_oracle() {
        let m = s2();
        let fd = fd::projection_hessian(&m, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(fd[0], -1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fd[1], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(fd[2], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn extended_sff_examples() {
        let m = s2();
        let a = m.extended_sff(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(a[0], -1.0, epsilon = 1e-14);
        let a = m.extended_sff(&[3.0, 0.0, 0.0], &[0.3, 1.0, -2.0]);
        assert_eq!(a.norm(), 0.0);
        let a = m.extended_sff(&[1.125, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert_abs_diff_eq!(a[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(a[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn extended_sff_variants_differ_only_off_tangent() {
        let m = s2();
        let p = [0.0, 1.1, 0.0];
        let tangent = [0.3, 0.0, -0.4];
        let raw = m.extended_sff_with(&p, &tangent, SffVariant::Raw);
        let pre = m.extended_sff_with(&p, &tangent, SffVariant::PreProjected);
        assert!(crate::vector::dist(&raw, &pre) < 1e-14);
        let mixed = [0.3, 0.5, -0.4];
        let raw = m.extended_sff_with(&p, &mixed, SffVariant::Raw);
        let pre = m.extended_sff_with(&p, &mixed, SffVariant::PreProjected);
        assert!(crate::vector::dist(&raw, &pre) > 1e-3);
    }

    #[test]
    fn penalty_examples() {
        let m = s2();
        assert_abs_diff_eq!(m.penalty_potential(&[1.1, 0.0, 0.0]), 0.01, epsilon = 1e-14);
        assert_eq!(m.penalty_potential(&[0.0, 1.0, 0.0]), 0.0);
        assert_abs_diff_eq!(m.penalty_potential(&[3.0, 0.0, 0.0]), 0.25, epsilon = 1e-15);
        let g = m.penalty_gradient(&[1.1, 0.0, 0.0]);
        assert_abs_diff_eq!(g[0], 0.2, epsilon = 1e-14);
        assert_eq!(m.penalty_gradient(&[0.0, 0.0, 1.0]).norm(), 0.0);
        let g = m.penalty_gradient(&[0.9, 0.0, 0.0]);
        assert_abs_diff_eq!(g[0], -0.2, epsilon = 1e-14);
        assert_eq!(m.penalty_gradient(&[3.0, 0.0, 0.0]).norm(), 0.0);
    }

    #[test]
    fn penalty_gradient_matches_finite_differences_across_the_bridge() {
        let m = s2();
        for r in [0.7, 0.8, 1.05, 1.2, 1.3, 1.4, 1.45] {
            let p = [r * 0.6, r * 0.8, 0.0];
            let fd = fd::gradient(|q| m.penalty_potential(q), &p);
            let g = m.penalty_gradient(&p);
            assert!(crate::vector::dist(&fd, &g) < 1e-8, "r = {r}");
        }
    }

    #[test]
    fn lookup_by_id() {
        assert_eq!(manifold_by_id("sphere2", None).unwrap().ambient_dim(), 3);
        assert_eq!(manifold_by_id("torus2", None).unwrap().ambient_dim(), 4);
        assert_eq!(manifold_by_id("circle", None).unwrap().intrinsic_dim(), 1);
        let m = manifold_by_id("sphere2", Some(0.2)).unwrap();
        assert_eq!(m.tube_radius(), 0.2);
        assert!(matches!(manifold_by_id("klein", None), Err(Error::NotFound(_))));
        assert!(manifold_by_id("sphere2", Some(0.4)).is_err());
    }

    #[test]
    fn custom_manifold_falls_back_to_finite_differences() {
        let custom = CustomManifold::new(
            "unit-circle",
            2,
            1,
            0.25,
            1.0,
            |p| {
                let r = norm(p);
                (r > 0.0).then(|| AmbientVector::from_slice(&[p[0] / r, p[1] / r]))
            },
            |p| (norm(p) - 1.0).abs(),
        );
        let p = [0.6, 0.8];
        let t = custom.tangent_project(&p, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(t[0], 0.64, epsilon = 1e-9);
        assert_abs_diff_eq!(t[1], -0.48, epsilon = 1e-9);
        let u = [-0.8, 0.6];
        let a = custom.second_fundamental_form(&p, &u, &u).unwrap();
        assert_abs_diff_eq!(a[0], -0.6, epsilon = 1e-6);
        assert_abs_diff_eq!(a[1], -0.8, epsilon = 1e-6);
        assert_eq!(custom.tangent_basis(&p).unwrap().len(), 1);
    }
}
