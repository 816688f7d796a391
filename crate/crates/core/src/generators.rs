//! Drivers `f(p, u) ∈ T_pN` and their ambient extension `f̄`.
//!
//! Gradients `u = (u_1, …, u_m)` are passed flat, axis-major: `u[i*L + k]`
//! is component `k` of `u_i`.

use crate::error::{Error, Result};
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::vector::{norm, AmbientVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

type DriverFn = dyn Fn(&[f64], &[f64]) -> AmbientVector + Send + Sync;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GeneratorKind {
    Zero,
    /// `c · Ω p` with `Ω` the rotation generator of the first coordinate plane.
    Rotation { c: f64 },
    /// `c · Π_N(p) u_1`.
    Shear { c: f64 },
    Custom,
}

#[derive(Clone)]
pub struct Generator {
    kind: GeneratorKind,
    declared_c0: f64,
    custom: Option<Arc<DriverFn>>,
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Generator")
            .field("kind", &self.kind)
            .field("declared_c0", &self.declared_c0)
            .finish()
    }
}

impl Generator {
    pub fn zero() -> Self {
        Generator {
            kind: GeneratorKind::Zero,
            declared_c0: 0.0,
            custom: None,
        }
    }

    pub fn rotation(c: f64) -> Self {
        Generator {
            kind: GeneratorKind::Rotation { c },
            declared_c0: c.abs(),
            custom: None,
        }
    }

    pub fn shear(c: f64) -> Self {
        Generator {
            kind: GeneratorKind::Shear { c },
            declared_c0: c.abs(),
            custom: None,
        }
    }

    /// A user driver. It must return tangent vectors for tangent input.
    pub fn custom(
        declared_c0: f64,
        f: impl Fn(&[f64], &[f64]) -> AmbientVector + Send + Sync + 'static,
    ) -> Self {
        Generator {
            kind: GeneratorKind::Custom,
            declared_c0,
            custom: Some(Arc::new(f)),
        }
    }

    /// Built-in generator by id: `zero`, `rotation`, `shear`.
    pub fn by_id(id: &str, c: f64) -> Result<Self> {
        match id {
            "zero" => Ok(Self::zero()),
            "rotation" => Ok(Self::rotation(c)),
            "shear" => Ok(Self::shear(c)),
            other => Err(Error::NotFound(other.to_string())),
        }
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn id(&self) -> &'static str {
        match self.kind {
            GeneratorKind::Zero => "zero",
            GeneratorKind::Rotation { .. } => "rotation",
            GeneratorKind::Shear { .. } => "shear",
            GeneratorKind::Custom => "custom",
        }
    }

    pub fn declared_c0(&self) -> f64 {
        self.declared_c0
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, GeneratorKind::Zero)
    }

    /// `f(p, u)` without checking `p ∈ N` or tangency of `u`.
    pub fn eval_unchecked(&self, p: &[f64], u: &[f64]) -> AmbientVector {
        let l = p.len();
        match self.kind {
            GeneratorKind::Zero => AmbientVector::zeros(l),
            GeneratorKind::Rotation { c } => {
                let mut out = AmbientVector::zeros(l);
                out[0] = -c * p[1];
                out[1] = c * p[0];
                out
            }
            GeneratorKind::Shear { c } => u[..l].iter().map(|x| c * x).collect(),
            GeneratorKind::Custom => (self.custom.as_ref().expect("custom driver"))(p, u),
        }
    }

    /// `f(p, u)` for `p ∈ N` and tangent `u_i`.
    pub fn eval<M: EmbeddedManifold + ?Sized>(&self, manifold: &M, p: &[f64], u: &[f64]) -> Result<AmbientVector> {
        manifold.ensure_on_manifold(p)?;
        let l = manifold.ambient_dim();
        for ui in u.chunks(l) {
            manifold.ensure_tangent(p, ui)?;
        }
        Ok(self.eval_unchecked(p, u))
    }

    /// `f̄(p, u) = φ(dist(p)) f(P_N(p), Π_N(P_N(p)) u)` inside `B(N, 2δ0)`,
    /// zero outside.
    pub fn eval_extended<M: EmbeddedManifold + ?Sized>(&self, manifold: &M, p: &[f64], u: &[f64]) -> AmbientVector {
        let l = manifold.ambient_dim();
        if self.is_zero() {
            return AmbientVector::zeros(l);
        }
        let cutoff = manifold.cutoff();
        let d = manifold.dist(p);
        if d >= cutoff.outer_radius() {
            return AmbientVector::zeros(l);
        }
        let Some(q) = manifold.nearest_point(p) else {
            return AmbientVector::zeros(l);
        };
        let ut: Vec<f64> = u
            .chunks(l)
            .flat_map(|ui| manifold.projection_jacobian(&q, ui).into_vec())
            .collect();
        self.eval_unchecked(&q, &ut) * cutoff.phi(d)
    }
}

/// Empirical growth constants of `f̄`; recorded, never asserted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthEstimate {
    /// max |f̄(p,u)| / (1 + |u|)
    pub c0_hat: f64,
    /// max of the sampled derivative norms (p-derivative scaled by 1/(1+|u|)).
    pub c1_hat: f64,
    pub samples: usize,
}

impl GrowthEstimate {
    /// `true` when the sampled bound exceeds the declared constant.
    pub fn exceeds_declared(&self, declared: f64) -> bool {
        self.c0_hat > declared * (1.0 + 1e-9)
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> AmbientVector {
    loop {
        let v: AmbientVector = (0..dim).map(|_| gaussian(rng)).collect();
        let n = v.norm();
        if n > 1e-8 {
            return v.scale(1.0 / n);
        }
    }
}

/// Samples points of `B(N, 2δ0)` and gradients `u ∈ R^{mL}` from a fixed
/// seed, so a larger sample count extends the same sequence.
pub fn estimate_growth_constants<M: EmbeddedManifold + ?Sized>(
    generator: &Generator,
    manifold: &M,
    m: usize,
    n_samples: usize,
    seed: u64,
) -> GrowthEstimate {
    let l = manifold.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outer = manifold.cutoff().outer_radius();
    let h = crate::geometry::fd::H_FIRST;
    let mut c0: f64 = 0.0;
    let mut c1: f64 = 0.0;
    for _ in 0..n_samples {
        let raw = random_unit(&mut rng, l).scale(manifold.extent());
        let base = manifold.nearest_point(&raw).unwrap_or(raw);
        let offset = random_unit(&mut rng, l).scale(outer * rng.random::<f64>());
        let p = base + &offset[..];
        let scale = 10.0 * rng.random::<f64>();
        let u: Vec<f64> = (0..m * l).map(|_| scale * gaussian(&mut rng)).collect();
        let unorm = norm(&u);
        let f = generator.eval_extended(manifold, &p, &u);
        c0 = c0.max(f.norm() / (1.0 + unorm));

        let dp = random_unit(&mut rng, l);
        let pp = p.clone() + &dp.clone().scale(h)[..];
        let pm = p.clone() - &dp.scale(h)[..];
        let dfp = crate::vector::dist(
            &generator.eval_extended(manifold, &pp, &u),
            &generator.eval_extended(manifold, &pm, &u),
        ) / (2.0 * h);
        let du = random_unit(&mut rng, m * l);
        let up: Vec<f64> = u.iter().zip(du.iter()).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(du.iter()).map(|(a, b)| a - h * b).collect();
        let dfu = crate::vector::dist(
            &generator.eval_extended(manifold, &p, &up),
            &generator.eval_extended(manifold, &p, &um),
        ) / (2.0 * h);
        c1 = c1.max(dfp / (1.0 + unorm)).max(dfu);
    }
    GrowthEstimate {
        c0_hat: c0,
        c1_hat: c1,
        samples: n_samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;
    use crate::vector::dot;

    #[test]
    fn eval_examples() {
        let s = Sphere::new(3);
        let u = [0.0, 0.3, 0.1];
        let z = Generator::zero().eval(&s, &[1.0, 0.0, 0.0], &u).unwrap();
        assert_eq!(z.norm(), 0.0);
        let r = Generator::rotation(1.0);
        assert_eq!(&r.eval(&s, &[1.0, 0.0, 0.0], &u).unwrap()[..], &[0.0, 1.0, 0.0]);
        assert_eq!(&r.eval(&s, &[0.0, 0.0, 1.0], &[0.0; 3]).unwrap()[..], &[0.0, 0.0, 0.0]);
        assert!(matches!(r.eval(&s, &[1.2, 0.0, 0.0], &u), Err(Error::NotOnManifold { .. })));
        assert!(matches!(
            r.eval(&s, &[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]),
            Err(Error::NotTangent { .. })
        ));
    }

    #[test]
    fn extended_examples() {
        let s = Sphere::new(3);
        let r = Generator::rotation(1.0);
        let p = [0.0, 0.6, 0.8];
        let u = [1.0, 0.0, 0.0];
        assert_eq!(r.eval_extended(&s, &p, &u), r.eval(&s, &p, &u).unwrap());
        assert_eq!(r.eval_extended(&s, &[0.0, 1.6, 0.0], &u).norm(), 0.0);
        let f = r.eval_extended(&s, &[1.1, 0.0, 0.0], &u);
        assert!((f[1] - 1.0).abs() < 1e-15 && f[0].abs() < 1e-15);
    }

    #[test]
    fn shear_projects_its_argument() {
        let s = Sphere::new(3);
        let g = Generator::shear(2.0);
        let f = g.eval_extended(&s, &[1.1, 0.0, 0.0], &[3.0, 1.0, 0.0]);
        assert!(crate::vector::dist(&f, &[0.0, 2.0, 0.0]) < 1e-14);
        let gp = s.penalty_gradient(&[1.1, 0.0, 0.0]);
        assert!(dot(&gp, &f).abs() < 1e-15);
    }

    #[test]
    fn growth_constants() {
        let s = Sphere::new(3);
        let z = estimate_growth_constants(&Generator::zero(), &s, 1, 200, 3);
        assert_eq!((z.c0_hat, z.c1_hat), (0.0, 0.0));
        let r = estimate_growth_constants(&Generator::rotation(1.0), &s, 1, 2000, 3);
        assert!(r.c0_hat <= 1.0 + 1e-12 && r.c0_hat > 0.5, "{}", r.c0_hat);
        assert!(!r.exceeds_declared(1.0));
        let custom = Generator::custom(1.0, |p, u| {
            let mut out = AmbientVector::zeros(p.len());
            out.axpy(0.5, &u[..p.len()]);
            out
        });
        let mut prev = 0.0;
        for n in [10, 50, 200] {
            let e = estimate_growth_constants(&custom, &s, 1, n, 9);
            assert!(e.c0_hat.is_finite() && e.c1_hat.is_finite());
            assert!(e.c0_hat >= prev);
            prev = e.c0_hat;
        }
    }

    #[test]
    fn by_id() {
        assert_eq!(Generator::by_id("rotation", 2.0).unwrap().declared_c0(), 2.0);
        assert!(Generator::by_id("wind", 1.0).is_err());
    }
}
