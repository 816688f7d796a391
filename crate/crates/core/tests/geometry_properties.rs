use mbsde::geometry::{EmbeddedManifold, FlatTorus, ManifoldOps, Sphere};
use proptest::prelude::*;

fn tangent_pair(m: &dyn EmbeddedManifold, raw: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let l = m.ambient_dim();
    let p = m.nearest_point(&raw[..l]).unwrap().into_vec();
    let u = m.projection_jacobian(&p, &raw[l..2 * l]).into_vec();
    let w = m.projection_jacobian(&p, &raw[2 * l..3 * l]).into_vec();
    (p, u, w)
}

fn manifolds() -> Vec<Box<dyn EmbeddedManifold>> {
    vec![Box::new(Sphere::new(3)), Box::new(FlatTorus::new())]
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #[test]
    fn sff_is_symmetric_bilinear_and_normal(raw in prop::collection::vec(0.2f64..2.0, 12), s in -3.0f64..3.0) {
        for m in manifolds() {
            let (p, u, w) = tangent_pair(m.as_ref(), &raw);
            let a_uw = m.second_fundamental_form(&p, &u, &w).unwrap();
            let a_wu = m.second_fundamental_form(&p, &w, &u).unwrap();
            let su: Vec<f64> = u.iter().map(|x| s * x).collect();
            let a_su = m.second_fundamental_form(&p, &su, &w).unwrap();
            for i in 0..p.len() {
                prop_assert!((a_uw[i] - a_wu[i]).abs() < 1e-10);
                prop_assert!((a_su[i] - s * a_uw[i]).abs() < 1e-9);
            }
            let t = m.projection_jacobian(&p, &a_uw);
            prop_assert!(t.iter().all(|x| x.abs() < 1e-9));
        }
    }

    #[test]
    fn distance_gradient_has_unit_length(raw in prop::collection::vec(-2.0f64..2.0, 4), h in 0.01f64..0.7) {
        for m in manifolds() {
            let l = m.ambient_dim();
            let Some(q) = m.nearest_point(&raw[..l]) else { continue };
            let mut n: Vec<f64> = raw[..l].iter().zip(q.iter()).map(|(a, b)| a - b).collect();
            let len = dot(&n, &n).sqrt();
            if len < 1e-6 {
                continue;
            }
            n.iter_mut().for_each(|x| *x /= len);
            let p: Vec<f64> = q.iter().zip(&n).map(|(a, b)| a + h * b).collect();
            let e = 1e-6;
            let grad: Vec<f64> = (0..l)
                .map(|i| {
                    let mut a = p.clone();
                    let mut b = p.clone();
                    a[i] += e;
                    b[i] -= e;
                    (m.dist(&a) - m.dist(&b)) / (2.0 * e)
                })
                .collect();
            prop_assert!((dot(&grad, &grad).sqrt() - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn penalty_gradient_is_the_gradient_of_the_potential(raw in prop::collection::vec(-2.0f64..2.0, 4), h in 0.0f64..0.7) {
        for m in manifolds() {
            let l = m.ambient_dim();
            let Some(q) = m.nearest_point(&raw[..l]) else { continue };
            let n: Vec<f64> = raw[..l].iter().zip(q.iter()).map(|(a, b)| a - b).collect();
            let len = dot(&n, &n).sqrt();
            if len < 1e-6 {
                continue;
            }
            let p: Vec<f64> = q.iter().zip(&n).map(|(a, b)| a + h * b / len).collect();
            let g = m.penalty_gradient(&p);
            let e = 1e-6;
            for i in 0..l {
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += e;
                b[i] -= e;
                let fd = (m.penalty_potential(&a) - m.penalty_potential(&b)) / (2.0 * e);
                prop_assert!((fd - g[i]).abs() < 1e-5, "{} vs {}", fd, g[i]);
            }
        }
    }
}
