use crate::error::{Error, Result};
use std::f64::consts::PI;

/// `(2πτ)^{−m/2} exp(−r²/(2τ))` for `τ > 0`.
pub fn heat_kernel_euclidean(tau: f64, r2: f64, m: usize) -> f64 {
    (2.0 * PI * tau).powf(-(m as f64) / 2.0) * (-r2 / (2.0 * tau)).exp()
}

/// Displacement `x − x0` in the fundamental domain centred at `x0`.
pub fn torus_displacement(x: &[f64], x0: &[f64]) -> [f64; 2] {
    let mut d = [0.0; 2];
    for (a, (xi, ci)) in x.iter().zip(x0).enumerate() {
        let mut v = (xi - ci).rem_euclid(1.0);
        if v >= 0.5 {
            v -= 1.0;
        }
        d[a] = v;
    }
    d
}

/// Backward heat kernel `ρ_{z0}(t, x)` centred at `z0 = (t0, x0)`, with
/// `|x − x0|` measured in the fundamental domain around `x0`.
pub fn heat_kernel(t0: f64, x0: &[f64], t: f64, x: &[f64]) -> Result<f64> {
    let tau = (t0 - t).abs();
    if tau < 1e-12 {
        return Err(Error::DegenerateTime(tau));
    }
    let d = torus_displacement(x, x0);
    let r2: f64 = d[..x0.len()].iter().map(|v| v * v).sum();
    Ok(heat_kernel_euclidean(tau, r2, x0.len()))
}
