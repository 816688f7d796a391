//! Small dense vectors of the ambient space `R^L`.
//!
//! Points and vectors share one representation; context decides which one a
//! value denotes. Values up to `L = 4` stay on the stack.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use std::ops::{Add, AddAssign, Deref, DerefMut, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct AmbientVector(SmallVec<[f64; 4]>);

impl AmbientVector {
    pub fn zeros(dim: usize) -> Self {
        AmbientVector(SmallVec::from_elem(0.0, dim))
    }

    pub fn from_slice(v: &[f64]) -> Self {
        AmbientVector(SmallVec::from_slice(v))
    }

    /// Standard basis vector `e_i` of `R^dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(self, other)
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(self, self)
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.0.iter_mut().for_each(|x| *x *= s);
        self
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: f64, x: &[f64]) {
        for (s, xi) in self.0.iter_mut().zip(x) {
            *s += a * xi;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0.into_vec()
    }
}

impl Deref for AmbientVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for AmbientVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for AmbientVector {
    fn from(v: Vec<f64>) -> Self {
        AmbientVector(SmallVec::from_vec(v))
    }
}

impl From<&[f64]> for AmbientVector {
    fn from(v: &[f64]) -> Self {
        Self::from_slice(v)
    }
}

impl<const N: usize> From<[f64; N]> for AmbientVector {
    fn from(v: [f64; N]) -> Self {
        Self::from_slice(&v)
    }
}

impl FromIterator<f64> for AmbientVector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        AmbientVector(iter.into_iter().collect())
    }
}

impl Add<&[f64]> for AmbientVector {
    type Output = AmbientVector;
    fn add(mut self, rhs: &[f64]) -> AmbientVector {
        self += rhs;
        self
    }
}

impl Add for AmbientVector {
    type Output = AmbientVector;
    fn add(self, rhs: AmbientVector) -> AmbientVector {
        self + &rhs[..]
    }
}

impl Sub<&[f64]> for AmbientVector {
    type Output = AmbientVector;
    fn sub(mut self, rhs: &[f64]) -> AmbientVector {
        self -= rhs;
        self
    }
}

impl Sub for AmbientVector {
    type Output = AmbientVector;
    fn sub(self, rhs: AmbientVector) -> AmbientVector {
        self - &rhs[..]
    }
}

impl AddAssign<&[f64]> for AmbientVector {
    fn add_assign(&mut self, rhs: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(rhs) {
            *a += b;
        }
    }
}

impl SubAssign<&[f64]> for AmbientVector {
    fn sub_assign(&mut self, rhs: &[f64]) {
        for (a, b) in self.0.iter_mut().zip(rhs) {
            *a -= b;
        }
    }
}

impl Mul<f64> for AmbientVector {
    type Output = AmbientVector;
    fn mul(self, s: f64) -> AmbientVector {
        self.scale(s)
    }
}

impl Neg for AmbientVector {
    type Output = AmbientVector;
    fn neg(self) -> AmbientVector {
        self.scale(-1.0)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> AmbientVector {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let a = AmbientVector::from([1.0, 2.0, 2.0]);
        let b = AmbientVector::basis(3, 1);
        assert_eq!(a.norm(), 3.0);
        assert_eq!(a.dot(&b), 2.0);
        assert_eq!(&(a.clone() - b.clone())[..], &[1.0, 1.0, 2.0]);
        assert_eq!(&(a.clone() + b.clone() * 2.0)[..], &[1.0, 4.0, 2.0]);
        assert_eq!(&(-a.clone())[..], &[-1.0, -2.0, -2.0]);
        let mut c = a.clone();
        c.axpy(-1.0, &a);
        assert_eq!(c, AmbientVector::zeros(3));
        assert_eq!(dist(&a, &b), sub(&a, &b).norm());
    }

    #[test]
    fn inline_and_spilled_storage_agree() {
        let v: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let a = AmbientVector::from(v.clone());
        assert_eq!(a.dim(), 9);
        assert_eq!(a.into_vec(), v);
        assert!(!AmbientVector::from([f64::NAN]).is_finite());
    }

    #[test]
    fn serializes_as_a_plain_array() {
        let a = AmbientVector::from([0.5, -1.0]);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[0.5,-1.0]");
    }
}
