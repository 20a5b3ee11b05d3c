//! Regularized image system for a plane wall at `z = 0`, fluid in `z > 0`.
//!
//! A force `f` at height `H` is cancelled on the wall by, at the mirror
//! point `y = y* - 2 H e3`,
//!
//! ```text
//! -S(x) f + 2 H Delta_{i3k}(x) q_k + H^2 PD(x) q + 2 H Rd(x) f,   q = (-f1, -f2, f3)
//! ```
//!
//! with `x = xhat - y`, the Stokes doublet `Delta_{ijk} = dS_{ij}/dx_k`, the
//! standard regularized dipole `PD`, and the rotlet difference
//! `Rd f = 3 eps^2 / R^5 (x3 f1, x3 f2, -(f1 x1 + f2 x2))`. For a segment all of
//! `x`, `f`, `q` and `H` are linear in `alpha`, so every term is a
//! polynomial of degree at most 5 times `R^-1`, `R^-3` or `R^-5`.

use crate::error::{Error, Result};
use crate::integrals::{table_from_closure, IndexSet, Segment, SegmentGeometry};

const IMAGE_ALL: IndexSet = IndexSet::IMAGE.closure();
use crate::kernels::{FluidParam, RegParam, Vec3};
use crate::poly::{Poly, VecPoly, DEG};
use crate::segment::{stokeslet_velocity, LoadKind, SegmentLoad};

/// Heights of a segment's endpoints above the wall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallContext {
    pub h0: f64,
    pub h1: f64,
}

impl WallContext {
    pub fn new(seg: &Segment) -> Result<Self> {
        let (h0, h1) = (seg.y0().z, seg.y1().z);
        if h0 > 0.0 && h1 > 0.0 {
            Ok(Self { h0, h1 })
        } else {
            Err(Error::WallViolation { h0, h1 })
        }
    }

    /// The mirrored segment `y*(alpha) - 2 H(alpha) e3`.
    pub fn image_segment(&self, seg: &Segment) -> Segment {
        let mirror = |p: &Vec3| Vec3::new(p.x, p.y, -p.z);
        Segment::new(mirror(seg.y0()), mirror(seg.y1())).expect("mirror preserves length")
    }
}

#[inline]
fn mirror_force(f: &Vec3) -> Vec3 {
    Vec3::new(-f.x, -f.y, f.z)
}

/// Image-system contribution at `xhat` for a force segment above the wall.
pub fn image_system_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
) -> Result<Vec3> {
    if load.kind != LoadKind::Force {
        return Err(Error::LoadKindMismatch {
            op: "image_system_segment",
            expected: "force",
            got: "non-force",
        });
    }
    let wall = WallContext::new(seg)?;
    Ok(image_velocity(xhat, seg, &wall, &load.a, &load.b, eps, mu))
}

/// Velocity at `xhat` from a force segment bounded by the wall: the free
/// space Stokeslet segment plus its images.
pub fn wall_stokeslet_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
) -> Result<Vec3> {
    let image = image_system_segment(xhat, seg, load, eps, mu)?;
    Ok(stokeslet_velocity(xhat, seg, &load.a, &load.b, eps, mu) + image)
}

pub(crate) fn image_velocity(
    xhat: &Vec3,
    seg: &Segment,
    wall: &WallContext,
    fa: &Vec3,
    fb: &Vec3,
    eps: RegParam,
    mu: FluidParam,
) -> Vec3 {
    let image = wall.image_segment(seg);
    let geom = SegmentGeometry::new(xhat, &image, eps);
    let e2 = geom.eps2;
    let e3 = Vec3::z();

    let x = VecPoly::linear(geom.x0, *image.v());
    let f = VecPoly::linear(*fa, *fb);
    let q = VecPoly::linear(mirror_force(fa), mirror_force(fb));
    let h = Poly::linear(wall.h0, wall.h1 - wall.h0);
    let x3 = x.component(2);
    let q3 = q.component(2);
    let fx = f.dot(&x);
    let qx = q.dot(&x);
    let e3p = VecPoly::linear(e3, Vec3::zeros());

    // -S f
    let p1 = -f;
    let mut p3 = -(f * e2) + -(fx * x);
    // 2 H Delta_{i3k} q_k
    p3 += (h * 2.0) * (q3 * x + x3 * q + -(qx * e3p));
    let mut p5 = (h * qx * -6.0) * (Poly::constant(e2) * e3p + x3 * x);
    // H^2 PD q
    let h2 = h * h;
    p3 += (h2 * -2.0) * q;
    p5 += (h2 * 6.0 * e2) * q + (h2 * qx * 6.0) * x;
    // 2 H Rd f
    let f_planar = VecPoly::linear(Vec3::new(fa.x, fa.y, 0.0), Vec3::new(fb.x, fb.y, 0.0));
    let x_planar = VecPoly::linear(Vec3::new(geom.x0.x, geom.x0.y, 0.0), Vec3::new(image.v().x, image.v().y, 0.0));
    p5 += (h * 6.0 * e2) * (x3 * f_planar + -(f_planar.dot(&x_planar) * e3p));
    p1.0[2..].iter().for_each(|c| debug_assert_eq!(*c, Vec3::zeros()));

    let t = table_from_closure(&geom, IMAGE_ALL);
    let mut u = p1.0[0] * t.t(0, -1) + p1.0[1] * t.t(1, -1);
    for n in 0..=DEG {
        u += p3.0[n] * t.t(n, -3) + p5.0[n] * t.t(n, -5);
    }
    u * (seg.length() * mu.prefactor())
}

/// Pointwise image system for a single regularized force at `y_star`
/// (`y_star.z > 0`), i.e. the velocity at `xhat` due to the images only.
pub fn point_image_system(xhat: &Vec3, y_star: &Vec3, f: &Vec3, eps: RegParam, mu: FluidParam) -> Result<Vec3> {
    let h = y_star.z;
    if h <= 0.0 {
        return Err(Error::WallViolation { h0: h, h1: h });
    }
    let y = Vec3::new(y_star.x, y_star.y, -h);
    let x = xhat - y;
    let e2 = eps.squared();
    let r2 = x.norm_squared() + e2;
    let r = r2.sqrt();
    let r3 = r2 * r;
    let r5 = r3 * r2;
    let q = mirror_force(f);
    let qx = q.dot(&x);
    let e3 = Vec3::z();
    let stokeslet = f * (1.0 / r + e2 / r3) + x * (f.dot(&x) / r3);
    let doublet = (x * q.z + q * x.z - e3 * qx) / r3 - (e3 * e2 + x * x.z) * (3.0 * qx / r5);
    let dipole = q * -(2.0 / r3 - 6.0 * e2 / r5) + x * (6.0 * qx / r5);
    let rot = Vec3::new(x.z * f.x, x.z * f.y, -(f.x * x.x + f.y * x.y)) * (3.0 * e2 / r5);
    Ok((-stokeslet + doublet * (2.0 * h) + dipole * (h * h) + rot * (2.0 * h)) * mu.prefactor())
}
