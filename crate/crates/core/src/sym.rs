//! Small fixed-size linear algebra: symmetric 3×3 matrices and the skew map.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Symmetric 3×3 matrix stored as its upper triangle
/// `[a11, a12, a13, a22, a23, a33]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SymMat3(pub [f64; 6]);

/// Index of `(i, j)` in the packed upper triangle.
#[inline]
const fn packed(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    match (i, j) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

impl SymMat3 {
    pub const ZERO: SymMat3 = SymMat3([0.0; 6]);
    pub const IDENTITY: SymMat3 = SymMat3([1.0, 0.0, 0.0, 1.0, 0.0, 1.0]);

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[packed(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.0[packed(i, j)] = v;
    }

    /// Symmetric part of an arbitrary matrix.
    pub fn from_mat(m: &Mat3) -> Self {
        let s = |i: usize, j: usize| 0.5 * (m[(i, j)] + m[(j, i)]);
        SymMat3([s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)])
    }

    pub fn to_mat(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.get(i, j))
    }

    /// `½ (a bᵀ + b aᵀ)`.
    pub fn sym_outer(a: &Vec3, b: &Vec3) -> Self {
        let s = |i: usize, j: usize| 0.5 * (a[i] * b[j] + b[i] * a[j]);
        SymMat3([s(0, 0), s(0, 1), s(0, 2), s(1, 1), s(1, 2), s(2, 2)])
    }

    /// `a aᵀ`.
    pub fn outer(a: &Vec3) -> Self {
        Self::sym_outer(a, a)
    }

    /// `aᵀ S b`.
    #[inline]
    pub fn bilinear(&self, a: &Vec3, b: &Vec3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a[i] * self.get(i, j) * b[j];
            }
        }
        s
    }

    #[inline]
    pub fn quad(&self, a: &Vec3) -> f64 {
        self.bilinear(a, a)
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3::from_fn(|i, _| (0..3).map(|j| self.get(i, j) * v[j]).sum())
    }

    /// Frobenius product `S : T`.
    pub fn frobenius(&self, other: &SymMat3) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0] + a[3] * b[3] + a[5] * b[5] + 2.0 * (a[1] * b[1] + a[2] * b[2] + a[4] * b[4])
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        self.0[0] + self.0[3] + self.0[5]
    }

    /// Positive definiteness via Cholesky.
    pub fn is_positive_definite(&self) -> bool {
        self.to_mat().cholesky().is_some()
    }
}

impl Add for SymMat3 {
    type Output = SymMat3;
    fn add(mut self, rhs: SymMat3) -> SymMat3 {
        self += rhs;
        self
    }
}

impl AddAssign for SymMat3 {
    fn add_assign(&mut self, rhs: SymMat3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for SymMat3 {
    type Output = SymMat3;
    fn sub(mut self, rhs: SymMat3) -> SymMat3 {
        self -= rhs;
        self
    }
}

impl SubAssign for SymMat3 {
    fn sub_assign(&mut self, rhs: SymMat3) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<SymMat3> for f64 {
    type Output = SymMat3;
    fn mul(self, rhs: SymMat3) -> SymMat3 {
        SymMat3(rhs.0.map(|v| self * v))
    }
}

impl Mul<f64> for SymMat3 {
    type Output = SymMat3;
    fn mul(self, rhs: f64) -> SymMat3 {
        rhs * self
    }
}

impl Neg for SymMat3 {
    type Output = SymMat3;
    fn neg(self) -> SymMat3 {
        SymMat3(self.0.map(|v| -v))
    }
}

/// The antisymmetric matrix with `skew(v) w = v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vec3() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-3.0..3.0f64).prop_map(Vec3::from)
    }

    proptest! {
        #[test]
        fn skew_is_cross_product(v in vec3(), w in vec3()) {
            let s = skew(&v);
            prop_assert!((s * w - v.cross(&w)).norm() < 1e-12);
            prop_assert!((s.transpose() + s).norm() < 1e-15);
            prop_assert!((s * v).norm() < 1e-12);
        }

        #[test]
        fn frobenius_matches_dense(a in prop::array::uniform6(-2.0..2.0f64), b in prop::array::uniform6(-2.0..2.0f64)) {
            let (sa, sb) = (SymMat3(a), SymMat3(b));
            let dense = sa.to_mat().component_mul(&sb.to_mat()).sum();
            prop_assert!((sa.frobenius(&sb) - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn packed_layout_round_trips() {
        let m = Mat3::new(1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0);
        let s = SymMat3::from_mat(&m);
        assert_eq!(s.0, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(s.to_mat(), m);
        assert_eq!(s.get(2, 1), 5.0);
    }

    #[test]
    fn sym_outer_quad_form() {
        let a = Vec3::new(1.0, 0.0, 0.0);
        let b = Vec3::new(0.0, 1.0, 0.0);
        let s = SymMat3::sym_outer(&a, &b);
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.quad(&(a + b)), 1.0);
    }
}
