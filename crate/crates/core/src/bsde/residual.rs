use super::assembly::BsdeSample;
use crate::generators::Generator;
use crate::geometry::{EmbeddedManifold, ManifoldOps};
use crate::vector::{dot, AmbientVector};
use serde::{Deserialize, Serialize};

/// Backward-equation residuals along one sample.
///
/// `r_j = Y_j − [ξ − Σ_{k≥j} Z_k ΔB_k − ½ Σ_{k≥j} Ā(Y_k)(Z_k^i, Z_k^i) Δt
///              + Σ_{k≥j} f̄(Y_k, Z_k) Δt]`, left-point sums, with the
/// discrete terminal value `ξ = Y_K` so that `r_K = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualLedger {
    /// `|r_j|`, `j = 0..=K`.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Norms of the three sums accumulated over the whole horizon.
    pub stochastic_integral: f64,
    pub curvature_drift: f64,
    pub generator_drift: f64,
    /// `|Y_K − h(B_T + x)|`.
    pub terminal_mismatch: f64,
}

impl ResidualLedger {
    pub fn terminal_residual(&self) -> f64 {
        *self.residuals.last().unwrap_or(&0.0)
    }

    pub fn max_residual_sq(&self) -> f64 {
        self.max_residual * self.max_residual
    }
}

/// Backward running sums of the three integrals, `[j][component]`.
struct Sums {
    stochastic: Vec<AmbientVector>,
    curvature: Vec<AmbientVector>,
    driver: Vec<AmbientVector>,
}

fn backward_sums<M: EmbeddedManifold + ?Sized>(sample: &BsdeSample, generator: &Generator, manifold: &M) -> Sums {
    let k = sample.steps();
    let l = sample.ambient_dim;
    let dt = sample.dt;
    let zero = AmbientVector::zeros(l);
    let mut stochastic = vec![zero.clone(); k + 1];
    let mut curvature = vec![zero.clone(); k + 1];
    let mut driver = vec![zero; k + 1];
    for j in (0..k).rev() {
        let y = sample.y(j);
        let db = sample.increment(j);
        let mut s = stochastic[j + 1].clone();
        let mut c = curvature[j + 1].clone();
        for axis in 0..sample.m {
            let zi = sample.z_axis(j, axis);
            s.axpy(db[axis], zi);
            c.axpy(dt, &manifold.extended_sff(y, zi));
        }
        let mut d = driver[j + 1].clone();
        if !generator.is_zero() {
            d.axpy(dt, &generator.eval_extended(manifold, y, sample.z(j)));
        }
        stochastic[j] = s;
        curvature[j] = c;
        driver[j] = d;
    }
    Sums {
        stochastic,
        curvature,
        driver,
    }
}

fn residual_vector(sample: &BsdeSample, sums: &Sums, terminal: &[f64], j: usize) -> AmbientVector {
    let mut r = AmbientVector::from_slice(sample.y(j));
    r -= terminal;
    r += &sums.stochastic[j];
    r.axpy(0.5, &sums.curvature[j]);
    r -= &sums.driver[j];
    r
}

pub fn bsde_residual<M: EmbeddedManifold + ?Sized>(sample: &BsdeSample, generator: &Generator, manifold: &M) -> ResidualLedger {
    let sums = backward_sums(sample, generator, manifold);
    let k = sample.steps();
    let terminal = sample.y(k).to_vec();
    let residuals: Vec<f64> = (0..=k).map(|j| residual_vector(sample, &sums, &terminal, j).norm()).collect();
    ResidualLedger {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        residuals,
        stochastic_integral: sums.stochastic[0].norm(),
        curvature_drift: 0.5 * sums.curvature[0].norm(),
        generator_drift: sums.driver[0].norm(),
        terminal_mismatch: sample.terminal_mismatch(),
    }
}

/// Difference of the two sides of the tested identity
/// `∫⟨Y_t^x, ψ⟩dx = ∫⟨h(B_T+x), ψ⟩dx − Σ∫(∫⟨Z^x, ψ⟩dx)dB − ½∫∫⟨Ā(Y^x)(Z^x,Z^x), ψ⟩ + ∫∫⟨f̄, ψ⟩`
/// at step `j`, by node quadrature over the start points of `samples`
/// (which must share one path and sit on a uniform grid of `T^m`).
pub fn weak_residual<M: EmbeddedManifold + ?Sized>(
    samples: &[BsdeSample],
    psi: &dyn Fn(&[f64]) -> AmbientVector,
    j: usize,
    generator: &Generator,
    manifold: &M,
) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let weight = 1.0 / samples.len() as f64;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for s in samples {
        let x = &s.x[..s.m];
        let p = psi(x);
        let sums = backward_sums(s, generator, manifold);
        lhs += dot(s.y(j), &p) * weight;
        let mut right = s.xi.clone();
        right -= &sums.stochastic[j];
        right.axpy(-0.5, &sums.curvature[j]);
        right += &sums.driver[j];
        rhs += dot(&right, &p) * weight;
    }
    lhs - rhs
}

/// Indices of start points whose max residual exceeds `factor` × the median.
pub fn flag_outliers(max_residuals: &[f64], factor: f64) -> Vec<usize> {
    if max_residuals.is_empty() {
        return Vec::new();
    }
    let mut sorted = max_residuals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    max_residuals
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > factor * median && r > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `Σ_j Σ_i |normal part of Z_j^i at P_N(Y_j)|² / Σ_j |Z_j|²` (0 when Z ≡ 0).
pub fn tangency_defect<M: EmbeddedManifold + ?Sized>(sample: &BsdeSample, manifold: &M) -> f64 {
    let mut normal = 0.0;
    let mut total = 0.0;
    for j in 0..=sample.steps() {
        let Some(q) = manifold.nearest_point(sample.y(j)) else { continue };
        for axis in 0..sample.m {
            let z = sample.z_axis(j, axis);
            let zt = manifold.projection_jacobian(&q, z);
            normal += crate::vector::dist(z, &zt).powi(2);
            total += dot(z, z);
        }
    }
    if total == 0.0 {
        0.0
    } else {
        normal / total
    }
}

/// `max_j dist_N(Y_j)`.
pub fn on_manifold_defect<M: EmbeddedManifold + ?Sized>(sample: &BsdeSample, manifold: &M) -> f64 {
    (0..=sample.steps()).map(|j| manifold.dist(sample.y(j))).fold(0.0, f64::max)
}
