//! Point (non-integrated) regularized Stokes kernels.
//!
//! All kernels use the blob `15 eps^4 / (8 pi (r^2 + eps^2)^{7/2})` and carry
//! the `1 / (8 pi mu)` factor themselves. Arguments follow one convention:
//! `xhat` is the evaluation point, `y0` the location of the singularity and
//! `x = xhat - y0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Regularization width `eps > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RegParam(f64);

impl RegParam {
    pub fn new(eps: f64) -> Result<Self> {
        if eps > 0.0 && eps.is_finite() {
            Ok(Self(eps))
        } else {
            Err(Error::InvalidParameter(format!(
                "regularization must be positive and finite, got {eps}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn squared(self) -> f64 {
        self.0 * self.0
    }
}

/// Dynamic viscosity `mu > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FluidParam(f64);

impl FluidParam {
    pub fn new(mu: f64) -> Result<Self> {
        if mu > 0.0 && mu.is_finite() {
            Ok(Self(mu))
        } else {
            Err(Error::InvalidParameter(format!(
                "viscosity must be positive and finite, got {mu}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 / (8 pi mu)`.
    #[inline]
    pub fn prefactor(self) -> f64 {
        1.0 / (8.0 * PI * self.0)
    }
}

impl Default for FluidParam {
    fn default() -> Self {
        Self(1.0)
    }
}

/// Which regularization of the potential dipole to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DipoleVariant {
    /// `-(2/R^3 - 6 eps^2/R^5) g + 6 (g.x) x / R^5`
    Standard,
    /// `-(2/R^3 + 3 eps^2/R^5 - 15 eps^4/R^7) g + (g.x) x (6/R^5 + 15 eps^2/R^7)`,
    /// which is also `8 pi mu` times the curl of the regularized rotlet.
    Kirchhoff,
}

/// Element whose pressure is requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PressureKind {
    Stokeslet,
    Rotlet,
    Dipole,
}

/// Regularized Stokeslet velocity at `xhat` from force `f` at `y0`.
pub fn point_stokeslet(xhat: &Vec3, y0: &Vec3, f: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    let x = xhat - y0;
    let e2 = eps.squared();
    let r2 = x.norm_squared() + e2;
    let r = r2.sqrt();
    let r3 = r2 * r;
    (f * (1.0 / r + e2 / r3) + x * (f.dot(&x) / r3)) * mu.prefactor()
}

/// Regularized rotlet velocity from torque `tau` at `y0`.
pub fn point_rotlet(xhat: &Vec3, y0: &Vec3, tau: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    let x = xhat - y0;
    let e2 = eps.squared();
    let r2 = x.norm_squared() + e2;
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    tau.cross(&x) * ((2.0 / r3 + 3.0 * e2 / r5) * mu.prefactor())
}

/// Regularized potential dipole of strength `g` at `y0`.
pub fn point_dipole(
    xhat: &Vec3,
    y0: &Vec3,
    g: &Vec3,
    eps: RegParam,
    mu: FluidParam,
    variant: DipoleVariant,
) -> Vec3 {
    let x = xhat - y0;
    let e2 = eps.squared();
    let r2 = x.norm_squared() + e2;
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let gx = g.dot(&x);
    let u = match variant {
        DipoleVariant::Standard => g * -(2.0 / r3 - 6.0 * e2 / r5) + x * (6.0 * gx / r5),
        DipoleVariant::Kirchhoff => {
            let r7 = r5 * r2;
            g * -(2.0 / r3 + 3.0 * e2 / r5 - 15.0 * e2 * e2 / r7)
                + x * (gx * (6.0 / r5 + 15.0 * e2 / r7))
        }
    };
    u * mu.prefactor()
}

/// Pressure of a regularized element. Independent of viscosity.
///
/// `eps = 0` is accepted here (unlike the velocity kernels) so the singular
/// limit of the Stokeslet pressure can be evaluated away from the source.
pub fn point_pressure(xhat: &Vec3, y0: &Vec3, f: &Vec3, eps: f64, kind: PressureKind) -> f64 {
    let x = xhat - y0;
    let e2 = eps * eps;
    let r2 = x.norm_squared() + e2;
    let fx = f.dot(&x);
    match kind {
        PressureKind::Rotlet => 0.0,
        PressureKind::Stokeslet => fx * (2.0 * r2 + 3.0 * e2) / (8.0 * PI * r2.powi(3) * r2.sqrt()),
        PressureKind::Dipole => -fx * 105.0 * e2 * e2 / (8.0 * PI * r2.powi(4) * r2.sqrt()),
    }
}

/// Singular Stokeslet `(I/r + x x^T / r^3) f / (8 pi mu)`; undefined at `x = 0`.
pub fn singular_stokeslet(xhat: &Vec3, y0: &Vec3, f: &Vec3, mu: FluidParam) -> Vec3 {
    let x = xhat - y0;
    let r = x.norm();
    (f / r + x * (f.dot(&x) / (r * r * r))) * mu.prefactor()
}

/// Singular potential dipole `(-g/r^3 + 3 (g.x) x / r^5) 2 / (8 pi mu)`, the
/// common far-field limit of both regularized dipoles.
pub fn singular_dipole(xhat: &Vec3, y0: &Vec3, g: &Vec3, mu: FluidParam) -> Vec3 {
    let x = xhat - y0;
    let r2 = x.norm_squared();
    let r3 = r2 * r2.sqrt();
    (g * (-2.0 / r3) + x * (6.0 * g.dot(&x) / (r3 * r2))) * mu.prefactor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> (RegParam, FluidParam) {
        (RegParam::new(1.0).unwrap(), FluidParam::new(1.0).unwrap())
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RegParam::new(0.0).is_err());
        assert!(RegParam::new(-1.0).is_err());
        assert!(RegParam::new(f64::NAN).is_err());
        assert!(FluidParam::new(0.0).is_err());
    }

    #[test]
    fn stokeslet_zero_force() {
        let (e, m) = unit();
        let u = point_stokeslet(&Vec3::new(0.3, 1.0, 2.0), &Vec3::zeros(), &Vec3::zeros(), e, m);
        assert_eq!(u, Vec3::zeros());
    }

    #[test]
    fn stokeslet_at_source() {
        let (e, m) = unit();
        let u = point_stokeslet(&Vec3::zeros(), &Vec3::zeros(), &Vec3::x(), e, m);
        assert_relative_eq!(u.x, 1.0 / (4.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(u.x, 0.0795775, epsilon = 1e-7);
        assert_eq!(u.y, 0.0);
        assert_eq!(u.z, 0.0);
    }

    #[test]
    fn stokeslet_far_field_matches_singular() {
        let eps = RegParam::new(0.01).unwrap();
        let mu = FluidParam::new(1.0).unwrap();
        let dir = Vec3::new(0.48, -0.6, 0.64).normalize();
        let xhat = dir * 100.0 * eps.get();
        let f = Vec3::new(0.2, 1.0, -0.7);
        let u = point_stokeslet(&xhat, &Vec3::zeros(), &f, eps, mu);
        let s = singular_stokeslet(&xhat, &Vec3::zeros(), &f, mu);
        assert!((u - s).norm() / s.norm() < 2e-4);
    }

    #[test]
    fn rotlet_cases() {
        let (e, m) = unit();
        let tau = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(point_rotlet(&Vec3::zeros(), &Vec3::zeros(), &tau, e, m), Vec3::zeros());
        assert_eq!(point_rotlet(&Vec3::new(0.0, 0.0, 3.0), &Vec3::zeros(), &tau, e, m).norm(), 0.0);
        let u = point_rotlet(&Vec3::x(), &Vec3::zeros(), &tau, e, m);
        let expected = (2.0 / 2f64.powf(1.5) + 3.0 / 2f64.powf(2.5)) / (8.0 * PI);
        assert_relative_eq!(u.y, expected, epsilon = 1e-15);
        assert_relative_eq!(u.y, 0.049236, epsilon = 1e-7);
        assert_eq!(u.x, 0.0);
    }

    #[test]
    fn dipole_cases() {
        let (e, m) = unit();
        let zero = point_dipole(&Vec3::x(), &Vec3::zeros(), &Vec3::zeros(), e, m, DipoleVariant::Standard);
        assert_eq!(zero, Vec3::zeros());
        let u = point_dipole(&Vec3::zeros(), &Vec3::zeros(), &Vec3::x(), e, m, DipoleVariant::Standard);
        assert_relative_eq!(u.x, 1.0 / (2.0 * PI), epsilon = 1e-15);
        assert_relative_eq!(u.x, 0.159155, epsilon = 1e-6);
    }

    #[test]
    fn dipole_variants_agree_far_away() {
        let eps = RegParam::new(0.02).unwrap();
        let mu = FluidParam::default();
        let g = Vec3::new(1.0, -0.5, 0.25);
        for dir in [Vec3::x(), Vec3::new(1.0, 1.0, 0.0).normalize(), Vec3::new(0.2, -0.3, 0.9).normalize()] {
            let xhat = dir * 100.0 * eps.get();
            let a = point_dipole(&xhat, &Vec3::zeros(), &g, eps, mu, DipoleVariant::Standard);
            let b = point_dipole(&xhat, &Vec3::zeros(), &g, eps, mu, DipoleVariant::Kirchhoff);
            let s = singular_dipole(&xhat, &Vec3::zeros(), &g, mu);
            assert!((a - b).norm() / a.norm() < 1e-3);
            assert!((a - s).norm() / s.norm() < 1e-3);
        }
    }

    #[test]
    fn pressure_cases() {
        let f = Vec3::new(1.0, 0.0, 0.0);
        let x = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(point_pressure(&x, &Vec3::zeros(), &f, 0.5, PressureKind::Rotlet), 0.0);
        let perp = Vec3::new(0.0, 2.0, 0.0);
        for kind in [PressureKind::Stokeslet, PressureKind::Rotlet, PressureKind::Dipole] {
            assert_eq!(point_pressure(&perp, &Vec3::zeros(), &f, 0.3, kind), 0.0);
        }
        let p = point_pressure(&x, &Vec3::zeros(), &f, 0.0, PressureKind::Stokeslet);
        assert_relative_eq!(p, 2.0 / (8.0 * PI), epsilon = 1e-15);
    }
}
