use super::{EmbeddedManifold, Sphere};
use crate::vector::AmbientVector;

/// Flat torus `S¹ × S¹ ⊂ R⁴`, each factor a unit circle in its own plane.
#[derive(Clone, Debug)]
pub struct FlatTorus {
    circle: Sphere,
}

impl Default for FlatTorus {
    fn default() -> Self {
        Self::new()
    }
}

impl FlatTorus {
    pub fn new() -> Self {
        FlatTorus {
            circle: Sphere::new(2),
        }
    }

    pub fn with_tube_radius(self, delta0: f64) -> Self {
        FlatTorus {
            circle: self.circle.with_tube_radius(delta0),
        }
    }

    fn join(a: AmbientVector, b: AmbientVector) -> AmbientVector {
        a.iter().chain(b.iter()).copied().collect()
    }
}

impl EmbeddedManifold for FlatTorus {
    fn id(&self) -> &str {
        "torus2"
    }

    fn ambient_dim(&self) -> usize {
        4
    }

    fn intrinsic_dim(&self) -> usize {
        2
    }

    fn tube_radius(&self) -> f64 {
        self.circle.tube_radius()
    }

    fn extent(&self) -> f64 {
        std::f64::consts::SQRT_2
    }

    fn nearest_point(&self, p: &[f64]) -> Option<AmbientVector> {
        let a = self.circle.nearest_point(&p[..2])?;
        let b = self.circle.nearest_point(&p[2..])?;
        Some(Self::join(a, b))
    }

    fn has_global_projection(&self) -> bool {
        true
    }

    fn dist(&self, p: &[f64]) -> f64 {
        self.circle.dist(&p[..2]).hypot(self.circle.dist(&p[2..]))
    }

    fn projection_hessian(&self, q: &[f64], u: &[f64]) -> AmbientVector {
        Self::join(
            self.circle.projection_hessian(&q[..2], &u[..2]),
            self.circle.projection_hessian(&q[2..], &u[2..]),
        )
    }

    fn projection_jacobian(&self, q: &[f64], v: &[f64]) -> AmbientVector {
        Self::join(
            self.circle.projection_jacobian(&q[..2], &v[..2]),
            self.circle.projection_jacobian(&q[2..], &v[2..]),
        )
    }

    fn sff_unchecked(&self, p: &[f64], u: &[f64], w: &[f64]) -> AmbientVector {
        Self::join(
            self.circle.sff_unchecked(&p[..2], &u[..2], &w[..2]),
            self.circle.sff_unchecked(&p[2..], &u[2..], &w[2..]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fd, ManifoldOps};

    #[test]
    fn closed_forms_match_finite_differences() {
        let t = FlatTorus::new();
        let q = [0.9, 0.3, -0.2, 1.1];
        let u = [0.1, -0.7, 0.4, 0.2];
        let exact = t.projection_hessian(&q, &u);
        let approx = fd::projection_hessian(&t, &q, &u);
        assert!(crate::vector::dist(&exact, &approx) < 1e-6);
        let exact = t.projection_jacobian(&q, &u);
        let approx = fd::projection_jacobian(&t, &q, &u);
        assert!(crate::vector::dist(&exact, &approx) < 1e-8);
    }

    #[test]
    fn torus_geometry_on_manifold() {
        let t = FlatTorus::new();
        let p = [1.0, 0.0, 0.0, 1.0];
        assert_eq!(t.dist(&p), 0.0);
        let basis = t.tangent_basis(&p).unwrap();
        assert_eq!(basis.len(), 2);
        let u = [0.0, 2.0, -1.0, 0.0];
        let a = t.second_fundamental_form(&p, &u, &u).unwrap();
        assert_eq!(&a[..], &[-4.0, 0.0, 0.0, -1.0]);
        assert!((t.dist(&[1.3, 0.0, 0.0, 0.6]) - 0.5).abs() < 1e-15);
    }
}
