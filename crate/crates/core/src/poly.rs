//! Polynomials in the segment parameter `alpha` of degree at most 5, with
//! scalar or vector coefficients. Used to expand the wall image integrands
//! into `sum_n P_n alpha^n R^q` form.

use std::ops::{Add, AddAssign, Mul, Neg};

use crate::kernels::Vec3;

pub(crate) const DEG: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Poly(pub [f64; DEG + 1]);

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct VecPoly(pub [Vec3; DEG + 1]);

impl Poly {
    pub fn zero() -> Self {
        Self([0.0; DEG + 1])
    }

    pub fn linear(c0: f64, c1: f64) -> Self {
        let mut p = Self::zero();
        p.0[0] = c0;
        p.0[1] = c1;
        p
    }

    pub fn constant(c: f64) -> Self {
        Self::linear(c, 0.0)
    }
}

impl VecPoly {
    pub fn zero() -> Self {
        Self([Vec3::zeros(); DEG + 1])
    }

    pub fn linear(c0: Vec3, c1: Vec3) -> Self {
        let mut p = Self::zero();
        p.0[0] = c0;
        p.0[1] = c1;
        p
    }

    pub fn dot(&self, other: &VecPoly) -> Poly {
        let mut out = Poly::zero();
        for i in 0..=DEG {
            if self.0[i] == Vec3::zeros() {
                continue;
            }
            for j in 0..=DEG - i {
                out.0[i + j] += self.0[i].dot(&other.0[j]);
            }
            debug_assert!(
                (DEG + 1 - i..=DEG).all(|j| other.0[j] == Vec3::zeros()),
                "polynomial degree overflow"
            );
        }
        out
    }

    /// Component `k` as a scalar polynomial.
    pub fn component(&self, k: usize) -> Poly {
        let mut out = Poly::zero();
        for i in 0..=DEG {
            out.0[i] = self.0[i][k];
        }
        out
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(mut self, rhs: Poly) -> Poly {
        for i in 0..=DEG {
            self.0[i] += rhs.0[i];
        }
        self
    }
}

impl Mul for Poly {
    type Output = Poly;
    fn mul(self, rhs: Poly) -> Poly {
        let mut out = Poly::zero();
        for i in 0..=DEG {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..=DEG - i {
                out.0[i + j] += self.0[i] * rhs.0[j];
            }
        }
        out
    }
}

impl Mul<f64> for Poly {
    type Output = Poly;
    fn mul(mut self, rhs: f64) -> Poly {
        self.0.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<VecPoly> for Poly {
    type Output = VecPoly;
    fn mul(self, rhs: VecPoly) -> VecPoly {
        let mut out = VecPoly::zero();
        for i in 0..=DEG {
            if self.0[i] == 0.0 {
                continue;
            }
            for j in 0..=DEG - i {
                out.0[i + j] += rhs.0[j] * self.0[i];
            }
        }
        out
    }
}

impl Mul<f64> for VecPoly {
    type Output = VecPoly;
    fn mul(mut self, rhs: f64) -> VecPoly {
        self.0.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Add for VecPoly {
    type Output = VecPoly;
    fn add(mut self, rhs: VecPoly) -> VecPoly {
        self += rhs;
        self
    }
}

impl AddAssign for VecPoly {
    fn add_assign(&mut self, rhs: VecPoly) {
        for i in 0..=DEG {
            self.0[i] += rhs.0[i];
        }
    }
}

impl Neg for VecPoly {
    type Output = VecPoly;
    fn neg(self) -> VecPoly {
        self * -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(p: &Poly, a: f64) -> f64 {
        p.0.iter().rev().fold(0.0, |acc, c| acc * a + c)
    }

    #[test]
    fn products_evaluate_pointwise() {
        let x = VecPoly::linear(Vec3::new(1.0, 2.0, -1.0), Vec3::new(0.5, -0.5, 2.0));
        let h = Poly::linear(0.3, 0.7);
        let hx2 = h * h * x.dot(&x);
        for a in [0.0, 0.3, 1.0] {
            let xa = x.0[0] + x.0[1] * a;
            let ha = 0.3 + 0.7 * a;
            assert!((eval(&hx2, a) - ha * ha * xa.norm_squared()).abs() < 1e-14);
            let v = h * x;
            assert!((eval(&v.component(2), a) - ha * xa.z).abs() < 1e-14);
        }
    }
}
