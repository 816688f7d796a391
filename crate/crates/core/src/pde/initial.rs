use super::field::FieldState;
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::vector::AmbientVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Built-in initial / terminal maps `h : T^m → N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InitialMap {
    /// `h ≡ point`.
    Constant {
        #[serde(deserialize_with = "crate::experiment::decimal::vec_f64")]
        point: Vec<f64>,
    },
    /// `h(x) = (cos 2πk x₁, sin 2πk x₁, 0, …)` on a sphere; on the torus the
    /// second circle factor is held at `(1, 0)`.
    GreatCircle { k: u32 },
    /// `P_N(c₀ + Σ_axis Σ_j a_j cos 2π(j+1)x_axis + b_j sin 2π(j+1)x_axis)`.
    Fourier {
        #[serde(deserialize_with = "crate::experiment::decimal::vec_f64")]
        constant: Vec<f64>,
        #[serde(default, deserialize_with = "crate::experiment::decimal::vec_vec_f64")]
        cos: Vec<Vec<f64>>,
        #[serde(default, deserialize_with = "crate::experiment::decimal::vec_vec_f64")]
        sin: Vec<Vec<f64>>,
    },
    /// Degree-one bubble on `S²`: the disk of radius `radius` around the
    /// centre of `T²` wraps the sphere once; its complement collapses to
    /// the north pole.
    Bubble {
        #[serde(deserialize_with = "crate::experiment::decimal::f64")]
        radius: f64,
    },
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

impl InitialMap {
    pub fn id(&self) -> String {
        match self {
            InitialMap::Constant { .. } => "constant".into(),
            InitialMap::GreatCircle { k } => format!("great_circle({k})"),
            InitialMap::Fourier { .. } => "fourier".into(),
            InitialMap::Bubble { .. } => "bubble".into(),
        }
    }

    /// Raw map value at `x` (before the on-manifold check).
    pub fn evaluate<M: EmbeddedManifold + ?Sized>(&self, manifold: &M, x: &[f64]) -> AmbientVector {
        let l = manifold.ambient_dim();
        match self {
            InitialMap::Constant { point } => AmbientVector::from_slice(point),
            InitialMap::GreatCircle { k } => {
                let a = 2.0 * PI * *k as f64 * x[0];
                let mut v = AmbientVector::zeros(l);
                v[0] = a.cos();
                v[1] = a.sin();
                if manifold.id() == "torus2" {
                    v[2] = 1.0;
                }
                v
            }
            InitialMap::Fourier { constant, cos, sin } => {
                let mut v = AmbientVector::from_slice(constant);
                for (axis, xa) in x.iter().enumerate() {
                    for (j, a) in cos.iter().enumerate() {
                        v.axpy((2.0 * PI * (j + 1) as f64 * xa).cos(), &a[l * axis..l * (axis + 1)]);
                    }
                    for (j, b) in sin.iter().enumerate() {
                        v.axpy((2.0 * PI * (j + 1) as f64 * xa).sin(), &b[l * axis..l * (axis + 1)]);
                    }
                }
                manifold.nearest_point(&v).unwrap_or(v)
            }
            InitialMap::Bubble { radius } => {
                let dx = x[0] - 0.5;
                let dy = x.get(1).map_or(0.0, |y| y - 0.5);
                let r = dx.hypot(dy);
                let theta = PI * (1.0 - smoothstep(r / radius));
                let phi = dy.atan2(dx);
                let mut v = AmbientVector::zeros(l);
                v[0] = theta.sin() * phi.cos();
                v[1] = theta.sin() * phi.sin();
                v[2] = theta.cos();
                v
            }
        }
    }

    /// Checks that the configuration makes sense for the manifold.
    pub fn validate<M: EmbeddedManifold + ?Sized>(&self, manifold: &M, m: usize) -> Result<()> {
        let l = manifold.ambient_dim();
        let bad = |msg: String| Err(Error::ConfigInvalid(msg));
        match self {
            InitialMap::Constant { point } if point.len() != l => {
                bad(format!("constant point has {} components, manifold needs {l}", point.len()))
            }
            InitialMap::GreatCircle { k } if *k == 0 => bad("great circle needs k ≥ 1".into()),
            InitialMap::GreatCircle { .. } if !(manifold.id().starts_with("sphere") || manifold.id() == "circle" || manifold.id() == "torus2") => {
                bad(format!("great circle undefined on {}", manifold.id()))
            }
            InitialMap::Fourier { constant, cos, sin }
                if constant.len() != l || cos.iter().chain(sin).any(|c| c.len() != l * m) =>
            {
                bad("Fourier coefficient vectors have the wrong length".into())
            }
            InitialMap::Bubble { radius } if !(*radius > 0.0 && *radius < 0.5) => {
                bad(format!("bubble radius {radius} outside (0, 0.5)"))
            }
            InitialMap::Bubble { .. } if l != 3 => bad("bubble map targets S² ⊂ R³".into()),
            _ => Ok(()),
        }
    }
}

/// Samples `h` at the grid nodes and projects once onto `N` to remove
/// roundoff.
pub fn initialize_from_map<M: EmbeddedManifold + ?Sized>(
    h: impl Fn(&[f64]) -> AmbientVector,
    grid: TorusGrid,
    manifold: &M,
) -> Result<FieldState> {
    let l = manifold.ambient_dim();
    let mut values = Vec::with_capacity(grid.len() * l);
    for node in 0..grid.len() {
        let x = grid.coords(node);
        let v = h(&x[..grid.dim()]);
        let d = manifold.dist(&v);
        if !(d <= 1e-6) || v.dim() != l {
            return Err(Error::InitialDataOffManifold { node, dist: d });
        }
        values.extend_from_slice(&manifold.project(&v)?);
    }
    Ok(FieldState::new(0.0, grid, l, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Sphere;

    #[test]
    fn constant_and_great_circle() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 64).unwrap();
        let c = InitialMap::Constant { point: vec![0.0, 0.0, 1.0] };
        let st = initialize_from_map(|x| c.evaluate(&s, x), grid, &s).unwrap();
        assert!(st.nodes().all(|v| v == [0.0, 0.0, 1.0]));
        let gc = InitialMap::GreatCircle { k: 1 };
        let st = initialize_from_map(|x| gc.evaluate(&s, x), grid, &s).unwrap();
        for i in 0..64 {
            let a = 2.0 * PI * i as f64 / 64.0;
            assert!(crate::vector::dist(st.node(i), &[a.cos(), a.sin(), 0.0]) < 1e-15);
            assert!(s.dist(st.node(i)) <= 1e-12);
        }
    }

    #[test]
    fn off_manifold_node_is_rejected() {
        let s = Sphere::new(3);
        let grid = TorusGrid::new(1, 16).unwrap();
        let err = initialize_from_map(
            |x| if x[0] == 0.0 { AmbientVector::from([1.1, 0.0, 0.0]) } else { AmbientVector::from([1.0, 0.0, 0.0]) },
            grid,
            &s,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InitialDataOffManifold { node: 0, .. }));
        let st = initialize_from_map(|_| AmbientVector::from([1.0 + 1e-8, 0.0, 0.0]), grid, &s).unwrap();
        assert_eq!(st.node(3), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn bubble_covers_both_poles() {
        let s = Sphere::new(3);
        let b = InitialMap::Bubble { radius: 0.3 };
        b.validate(&s, 2).unwrap();
        let centre = b.evaluate(&s, &[0.5, 0.5]);
        assert!((centre[2] + 1.0).abs() < 1e-12);
        let far = b.evaluate(&s, &[0.0, 0.0]);
        assert!((far[2] - 1.0).abs() < 1e-12);
        assert!(s.dist(&b.evaluate(&s, &[0.6, 0.45])) < 1e-12);
    }

    #[test]
    fn fourier_map_projects() {
        let s = Sphere::new(3);
        let f = InitialMap::Fourier {
            constant: vec![0.0, 0.0, 1.0],
            cos: vec![vec![0.5, 0.0, 0.0]],
            sin: vec![vec![0.0, 0.5, 0.0]],
        };
        f.validate(&s, 1).unwrap();
        let v = f.evaluate(&s, &[0.1]);
        assert!(s.dist(&v) < 1e-14);
        assert!(InitialMap::Constant { point: vec![1.0, 0.0] }.validate(&s, 1).is_err());
    }
}
