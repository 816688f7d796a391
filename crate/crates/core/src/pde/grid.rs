use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform periodic grid on `T^m = R^m / Z^m`, `m ∈ {1, 2}`.
///
/// Node `(i, j)` sits at `(i/n, j/n)` and has flat index `i + n·j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    m: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(m: usize, n_nodes: usize) -> Result<Self> {
        if !(1..=2).contains(&m) {
            return Err(Error::ConfigInvalid(format!("spatial dimension {m} not in {{1, 2}}")));
        }
        if n_nodes < 8 {
            return Err(Error::ConfigInvalid(format!("{n_nodes} nodes per axis, need at least 8")));
        }
        Ok(TorusGrid { m, n: n_nodes })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.m as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Volume element `Δx^m` for node quadrature.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.m as i32)
    }

    /// Per-axis integer coordinates of a node.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        [node % self.n, node / self.n]
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        idx[0] + if self.m == 2 { self.n * idx[1] } else { 0 }
    }

    pub fn coords(&self, node: usize) -> [f64; 2] {
        let [i, j] = self.multi_index(node);
        let h = self.spacing();
        [i as f64 * h, if self.m == 2 { j as f64 * h } else { 0.0 }]
    }

    /// Neighbour of `node` one step along `axis` in direction `sign` (±1),
    /// with periodic wrap.
    pub fn neighbor(&self, node: usize, axis: usize, sign: isize) -> usize {
        let mut idx = self.multi_index(node);
        let n = self.n as isize;
        idx[axis] = ((idx[axis] as isize + sign).rem_euclid(n)) as usize;
        self.flat_index(idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes() {
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(1, 4).is_err());
        assert_eq!(TorusGrid::new(2, 8).unwrap().len(), 64);
    }

    #[test]
    fn neighbors_are_inverse_permutations() {
        for m in 1..=2 {
            let g = TorusGrid::new(m, 9).unwrap();
            for axis in 0..m {
                let mut seen = vec![false; g.len()];
                for node in 0..g.len() {
                    let fwd = g.neighbor(node, axis, 1);
                    assert_eq!(g.neighbor(fwd, axis, -1), node);
                    assert!(!seen[fwd]);
                    seen[fwd] = true;
                }
            }
        }
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.neighbor(7, 0, 1), 0);
        assert_eq!(g.neighbor(0, 0, -1), 7);
    }
}
