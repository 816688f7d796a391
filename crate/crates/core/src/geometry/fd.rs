//! Central finite-difference stencils used as the default geometry backend
//! and as independent oracles for the closed forms.

use super::EmbeddedManifold;
use crate::vector::{norm, AmbientVector};

/// Step for first derivatives.
pub const H_FIRST: f64 = 1e-5;
/// Step for second derivatives.
pub const H_SECOND: f64 = 1e-4;

fn shifted(p: &[f64], dir: &[f64], h: f64) -> AmbientVector {
    p.iter().zip(dir).map(|(a, b)| a + h * b).collect()
}

fn project_or_nan<M: EmbeddedManifold + ?Sized>(m: &M, p: &[f64]) -> AmbientVector {
    m.nearest_point(p)
        .unwrap_or_else(|| AmbientVector::from(vec![f64::NAN; p.len()]))
}

/// Directional second difference of `P_N` at `q` along `u`, i.e. the
/// quadratic form `Σ ∂²P_N/∂p_i∂p_j (q) u_i u_j`.
pub fn projection_hessian<M: EmbeddedManifold + ?Sized>(m: &M, q: &[f64], u: &[f64]) -> AmbientVector {
    let len = norm(u);
    if len == 0.0 {
        return AmbientVector::zeros(q.len());
    }
    let dir: AmbientVector = u.iter().map(|x| x / len).collect();
    let h = H_SECOND;
    let plus = project_or_nan(m, &shifted(q, &dir, h));
    let minus = project_or_nan(m, &shifted(q, &dir, -h));
    let centre = project_or_nan(m, q);
    let scale = len * len / (h * h);
    plus.iter()
        .zip(minus.iter())
        .zip(centre.iter())
        .map(|((a, b), c)| (a - 2.0 * c + b) * scale)
        .collect()
}

/// Directional first difference of `P_N` at `q` along `v`.
pub fn projection_jacobian<M: EmbeddedManifold + ?Sized>(m: &M, q: &[f64], v: &[f64]) -> AmbientVector {
    let len = norm(v);
    if len == 0.0 {
        return AmbientVector::zeros(q.len());
    }
    let dir: AmbientVector = v.iter().map(|x| x / len).collect();
    let h = H_FIRST;
    let plus = project_or_nan(m, &shifted(q, &dir, h));
    let minus = project_or_nan(m, &shifted(q, &dir, -h));
    let scale = len / (2.0 * h);
    plus.iter().zip(minus.iter()).map(|(a, b)| (a - b) * scale).collect()
}

/// Central-difference gradient of a scalar field.
pub fn gradient(f: impl Fn(&[f64]) -> f64, p: &[f64]) -> AmbientVector {
    let h = H_FIRST;
    let mut x = AmbientVector::from_slice(p);
    (0..p.len())
        .map(|i| {
            x[i] = p[i] + h;
            let fp = f(&x);
            x[i] = p[i] - h;
            let fm = f(&x);
            x[i] = p[i];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Central second difference `∂²f(p)(u, u)` along `u`.
pub fn second_directional(f: impl Fn(&[f64]) -> f64, p: &[f64], u: &[f64]) -> f64 {
    let len = norm(u);
    if len == 0.0 {
        return 0.0;
    }
    let dir: AmbientVector = u.iter().map(|x| x / len).collect();
    let h = H_SECOND;
    let fp = f(&shifted(p, &dir, h));
    let fm = f(&shifted(p, &dir, -h));
    let fc = f(p);
    (fp - 2.0 * fc + fm) / (h * h) * len * len
}
