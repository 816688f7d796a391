use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One `R^m` Brownian path on the grid `t_j = jΔt`, `j = 0..=K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrownianPath {
    pub seed: u64,
    pub dt: f64,
    pub m: usize,
    /// `ΔB_j = B_{t_{j+1}} − B_{t_j}`, laid out `[j][axis]`.
    pub increments: Vec<f64>,
    /// `B_{t_j}`, laid out `[j][axis]`; `B_0 = 0`.
    pub positions: Vec<f64>,
}

/// Gaussian draw `(seed, j, axis) ↦ N(0, 1)`.
///
/// Each axis is its own ChaCha stream; draw `j` consumes the two 64-bit
/// words at position `2j` (Box–Muller), so any draw can be reproduced
/// without generating its predecessors.
pub fn standard_normal_at(seed: u64, j: u64, axis: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(axis);
    rng.set_word_pos(4 * j as u128);
    box_muller(&mut rng)
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let a: u64 = rng.random();
    let b: u64 = rng.random();
    // (0, 1] and [0, 1) from the top 53 bits
    let u1 = ((a >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Number of steps `T/Δt`, checking divisibility.
pub fn step_count(dt: f64, t_final: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(Error::ConfigInvalid(format!("need Δt > 0 and T ≥ 0, got {dt}, {t_final}")));
    }
    let k = (t_final / dt).round();
    if (k * dt - t_final).abs() > 1e-9 * dt {
        return Err(Error::ConfigInvalid(format!("Δt = {dt} does not divide T = {t_final}")));
    }
    Ok(k as usize)
}

/// Reproducible Brownian path with `N(0, Δt·I)` increments.
pub fn sample_brownian(seed: u64, dt: f64, t_final: f64, m: usize) -> Result<BrownianPath> {
    let k = step_count(dt, t_final)?;
    let sd = dt.sqrt();
    let mut increments = vec![0.0; k * m];
    for axis in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(axis as u64);
        for j in 0..k {
            increments[j * m + axis] = sd * box_muller(&mut rng);
        }
    }
    Ok(BrownianPath::from_increments(seed, dt, m, increments))
}

impl BrownianPath {
    pub fn from_increments(seed: u64, dt: f64, m: usize, increments: Vec<f64>) -> Self {
        let k = increments.len() / m;
        let mut positions = vec![0.0; (k + 1) * m];
        for j in 0..k {
            for a in 0..m {
                positions[(j + 1) * m + a] = positions[j * m + a] + increments[j * m + a];
            }
        }
        BrownianPath {
            seed,
            dt,
            m,
            increments,
            positions,
        }
    }

    pub fn steps(&self) -> usize {
        self.increments.len() / self.m
    }

    pub fn final_time(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }

    pub fn position(&self, j: usize) -> &[f64] {
        &self.positions[j * self.m..(j + 1) * self.m]
    }

    pub fn increment(&self, j: usize) -> &[f64] {
        &self.increments[j * self.m..(j + 1) * self.m]
    }

    /// The same path observed every `factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianPath> {
        if factor == 0 || self.steps() % factor != 0 {
            return Err(Error::ConfigInvalid(format!("cannot coarsen {} steps by {factor}", self.steps())));
        }
        let k = self.steps() / factor;
        let mut inc = vec![0.0; k * self.m];
        for j in 0..k {
            for a in 0..self.m {
                inc[j * self.m + a] = (0..factor).map(|s| self.increments[(j * factor + s) * self.m + a]).sum();
            }
        }
        Ok(BrownianPath::from_increments(self.seed, self.dt * factor as f64, self.m, inc))
    }

    /// The path with every increment after step `j` discarded (set to zero).
    pub fn truncated(&self, j: usize) -> BrownianPath {
        let mut inc = self.increments.clone();
        for x in inc.iter_mut().skip(j * self.m) {
            *x = 0.0;
        }
        BrownianPath::from_increments(self.seed, self.dt, self.m, inc)
    }
}

/// Per-path seed derived from a base seed and the path index (SplitMix64).
pub fn path_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_counter_addressable() {
        let a = sample_brownian(7, 1e-3, 0.1, 2).unwrap();
        let b = sample_brownian(7, 1e-3, 0.1, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.position(0), &[0.0, 0.0]);
        for (j, axis) in [(0usize, 0usize), (5, 1), (99, 0)] {
            let direct = standard_normal_at(7, j as u64, axis as u64) * 1e-3f64.sqrt();
            assert_eq!(a.increment(j)[axis], direct);
        }
        let c = sample_brownian(8, 1e-3, 0.1, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_horizon() {
        let p = sample_brownian(1, 1e-3, 0.0, 1).unwrap();
        assert_eq!(p.steps(), 0);
        assert_eq!(p.positions, vec![0.0]);
    }

    #[test]
    fn rejects_non_dividing_step() {
        assert!(sample_brownian(1, 0.3, 1.0, 1).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let dt = 1e-3;
        let n = 100_000;
        let p = sample_brownian(2024, dt, n as f64 * dt, 1).unwrap();
        let mean = p.increments.iter().sum::<f64>() / n as f64;
        let var = p.increments.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se_mean = (dt / n as f64).sqrt();
        let se_var = dt * (2.0 / (n - 1) as f64).sqrt();
        assert!(mean.abs() < 5.0 * se_mean, "{mean}");
        assert!((var - dt).abs() < 5.0 * se_var, "{var}");
    }

    #[test]
    fn coarsening_keeps_positions() {
        let p = sample_brownian(3, 1e-3, 0.064, 2).unwrap();
        let c = p.coarsen(4).unwrap();
        assert_eq!(c.steps(), 16);
        for j in 0..=16 {
            for a in 0..2 {
                assert!((c.position(j)[a] - p.position(4 * j)[a]).abs() < 1e-14);
            }
        }
        assert!(p.coarsen(5).is_err());
    }

    #[test]
    fn path_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| path_seed(42, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }
}
