use super::EmbeddedManifold;
use crate::vector::{dot, norm, AmbientVector};

/// Tube radii must keep `B(N, 3δ0)` clear of the origin.
pub(crate) const MAX_TUBE_RADIUS: f64 = 0.33;

/// Unit sphere `S^{n-1} ⊂ R^n` with closed-form geometry.
#[derive(Clone, Debug)]
pub struct Sphere {
    ambient: usize,
    delta0: f64,
    id: String,
}

impl Sphere {
    pub fn new(ambient_dim: usize) -> Self {
        assert!(ambient_dim >= 2, "S^0 is not supported");
        let id = match ambient_dim {
            2 => "circle".to_string(),
            n => format!("sphere{}", n - 1),
        };
        Sphere {
            ambient: ambient_dim,
            delta0: 0.25,
            id,
        }
    }

    pub fn with_tube_radius(mut self, delta0: f64) -> Self {
        assert!(delta0 > 0.0 && delta0 <= MAX_TUBE_RADIUS);
        self.delta0 = delta0;
        self
    }
}

impl EmbeddedManifold for Sphere {
    fn id(&self) -> &str {
        &self.id
    }

    fn ambient_dim(&self) -> usize {
        self.ambient
    }

    fn intrinsic_dim(&self) -> usize {
        self.ambient - 1
    }

    fn tube_radius(&self) -> f64 {
        self.delta0
    }

    fn extent(&self) -> f64 {
        1.0
    }

    fn nearest_point(&self, p: &[f64]) -> Option<AmbientVector> {
        let r = norm(p);
        (r > 0.0).then(|| p.iter().map(|x| x / r).collect())
    }

    fn has_global_projection(&self) -> bool {
        true
    }

    fn dist(&self, p: &[f64]) -> f64 {
        (norm(p) - 1.0).abs()
    }

    // P(q) = q/|q|:
    // D²P(q)(u,u) = −(2⟨q,u⟩u + |u|²q)/|q|³ + 3⟨q,u⟩² q/|q|⁵
    fn projection_hessian(&self, q: &[f64], u: &[f64]) -> AmbientVector {
        let r = norm(q);
        let qu = dot(q, u);
        let uu = dot(u, u);
        let r3 = r * r * r;
        let r5 = r3 * r * r;
        q.iter()
            .zip(u)
            .map(|(qi, ui)| -(2.0 * qu * ui + uu * qi) / r3 + 3.0 * qu * qu * qi / r5)
            .collect()
    }

    fn projection_jacobian(&self, q: &[f64], v: &[f64]) -> AmbientVector {
        let r = norm(q);
        let qv = dot(q, v) / (r * r);
        q.iter().zip(v).map(|(qi, vi)| (vi - qv * qi) / r).collect()
    }

    fn sff_unchecked(&self, p: &[f64], u: &[f64], w: &[f64]) -> AmbientVector {
        let c = -dot(u, w);
        p.iter().map(|x| c * x).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{fd, ManifoldOps};

    #[test]
    fn closed_forms_match_finite_differences() {
        let s = Sphere::new(3);
        let q = [0.3, -1.1, 0.4];
        let u = [0.2, 0.5, -0.7];
        let h = s.projection_hessian(&q, &u);
        let hf = fd::projection_hessian(&s, &q, &u);
        let j = s.projection_jacobian(&q, &u);
        let jf = fd::projection_jacobian(&s, &q, &u);
        for i in 0..3 {
            assert!((h[i] - hf[i]).abs() < 1e-5);
            assert!((j[i] - jf[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn higher_dimensional_sphere() {
        let s = Sphere::new(5);
        assert_eq!(s.intrinsic_dim(), 4);
        let p = [0.0, 0.0, 0.0, 0.0, 1.0];
        let u = [0.0, 3.0, 0.0, 4.0, 0.0];
        assert_eq!(&s.second_fundamental_form(&p, &u, &u).unwrap()[..], &[0.0, 0.0, 0.0, 0.0, -25.0]);
        assert_eq!(s.dist(&[0.0, 0.0, 0.0, 0.0, 0.0]), 1.0);
        assert!(s.nearest_point(&[0.0; 5]).is_none());
    }
}
