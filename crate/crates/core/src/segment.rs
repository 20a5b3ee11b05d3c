//! Velocity and pressure at a point due to a straight segment carrying a
//! linearly varying density of Stokeslets, rotlets or potential dipoles.
//!
//! With `x(alpha) = x0 + alpha v` and density `w(alpha) = a + alpha b`, the
//! integrand `(w.x) x` expands into the vector coefficients
//!
//! ```text
//! w0 = (a.x0) x0
//! w1 = (a.v) x0 + (a.x0) v + (b.x0) x0
//! w2 = ((a.v) + (b.x0)) v + (b.v) x0
//! w3 = (b.v) v
//! ```
//!
//! shared by the Stokeslet and both dipoles; the rotlet uses the cross
//! products `a x x0`, `b x x0 + a x v`, `b x v`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::integrals::{
    stokeslet_integrals, table_from_closure, IndexSet, Segment, SegmentGeometry, StokesletIntegrals, TnqTable,
};

const ROTLET_ALL: IndexSet = IndexSet::ROTLET.closure();
const DIPOLE_ALL: IndexSet = IndexSet::DIPOLE.closure();
const KIRCHHOFF_ALL: IndexSet = IndexSet::KIRCHHOFF.closure();
const PRESSURE_ALL: IndexSet = IndexSet::PRESSURE.closure();
use crate::kernels::{DipoleVariant, FluidParam, RegParam, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadKind {
    Force,
    Torque,
    Dipole,
}

impl LoadKind {
    fn name(self) -> &'static str {
        match self {
            LoadKind::Force => "force",
            LoadKind::Torque => "torque",
            LoadKind::Dipole => "dipole",
        }
    }
}

/// Linear density `a + alpha b` along a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentLoad {
    pub kind: LoadKind,
    /// Value at `alpha = 0` (the `y0` end).
    pub a: Vec3,
    /// Slope; the value at `y1` is `a + b`.
    pub b: Vec3,
}

impl SegmentLoad {
    pub fn new(kind: LoadKind, a: Vec3, b: Vec3) -> Self {
        Self { kind, a, b }
    }

    /// From endpoint values `w0` at `y0` and `w1` at `y1`.
    pub fn from_endpoints(kind: LoadKind, w0: Vec3, w1: Vec3) -> Self {
        Self { kind, a: w0, b: w1 - w0 }
    }

    pub fn force(w0: Vec3, w1: Vec3) -> Self {
        Self::from_endpoints(LoadKind::Force, w0, w1)
    }

    pub fn torque(w0: Vec3, w1: Vec3) -> Self {
        Self::from_endpoints(LoadKind::Torque, w0, w1)
    }

    pub fn dipole(w0: Vec3, w1: Vec3) -> Self {
        Self::from_endpoints(LoadKind::Dipole, w0, w1)
    }

    pub fn at(&self, alpha: f64) -> Vec3 {
        self.a + self.b * alpha
    }

    /// Net strength over a segment of length `l`: `l (w0 + w1) / 2`.
    pub fn total(&self, l: f64) -> Vec3 {
        (self.a + self.b * 0.5) * l
    }

    fn expect(&self, op: &'static str, kind: LoadKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::LoadKindMismatch {
                op,
                expected: kind.name(),
                got: self.kind.name(),
            })
        }
    }
}

/// Polynomial coefficients of `(w.x) x`.
#[inline]
pub(crate) fn outer_coefficients(x0: &Vec3, v: &Vec3, a: &Vec3, b: &Vec3) -> [Vec3; 4] {
    let ax = a.dot(x0);
    let av = a.dot(v);
    let bx = b.dot(x0);
    let bv = b.dot(v);
    [
        x0 * ax,
        x0 * (av + bx) + v * ax,
        v * (av + bx) + x0 * bv,
        v * bv,
    ]
}

/// `(8 pi mu / L) u` for a Stokeslet segment.
#[inline]
pub(crate) fn stokeslet_sum(geom: &SegmentGeometry, v: &Vec3, t: &StokesletIntegrals, a: &Vec3, b: &Vec3) -> Vec3 {
    let e2 = geom.eps2;
    let w = outer_coefficients(&geom.x0, v, a, b);
    a * (t.t0m1 + e2 * t.t0m3)
        + b * (t.t1m1 + e2 * t.t1m3)
        + w[0] * t.t0m3
        + w[1] * t.t1m3
        + w[2] * t.t2m3
        + w[3] * t.t3m3
}

#[inline]
pub(crate) fn rotlet_sum(geom: &SegmentGeometry, v: &Vec3, t: &TnqTable, a: &Vec3, b: &Vec3) -> Vec3 {
    let e2 = geom.eps2;
    let w0 = a.cross(&geom.x0);
    let w1 = b.cross(&geom.x0) + a.cross(v);
    let w2 = b.cross(v);
    w0 * (2.0 * t.t(0, -3) + 3.0 * e2 * t.t(0, -5))
        + w1 * (2.0 * t.t(1, -3) + 3.0 * e2 * t.t(1, -5))
        + w2 * (2.0 * t.t(2, -3) + 3.0 * e2 * t.t(2, -5))
}

#[inline]
pub(crate) fn dipole_sum(
    geom: &SegmentGeometry,
    v: &Vec3,
    t: &TnqTable,
    a: &Vec3,
    b: &Vec3,
    variant: DipoleVariant,
) -> Vec3 {
    let e2 = geom.eps2;
    let w = outer_coefficients(&geom.x0, v, a, b);
    match variant {
        DipoleVariant::Standard => {
            let iso = |n| 2.0 * t.t(n, -3) - 6.0 * e2 * t.t(n, -5);
            -(a * iso(0)) - b * iso(1)
                + (w[0] * t.t(0, -5) + w[1] * t.t(1, -5) + w[2] * t.t(2, -5) + w[3] * t.t(3, -5)) * 6.0
        }
        DipoleVariant::Kirchhoff => {
            let iso = |n| 2.0 * t.t(n, -3) + 3.0 * e2 * t.t(n, -5) - 15.0 * e2 * e2 * t.t(n, -7);
            let radial = |n| 6.0 * t.t(n, -5) + 15.0 * e2 * t.t(n, -7);
            -(a * iso(0)) - b * iso(1)
                + w[0] * radial(0)
                + w[1] * radial(1)
                + w[2] * radial(2)
                + w[3] * radial(3)
        }
    }
}

/// Velocity at `xhat` from a segment of regularized Stokeslets with linear
/// force density.
pub fn stokeslet_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
) -> Result<Vec3> {
    load.expect("stokeslet_segment", LoadKind::Force)?;
    Ok(stokeslet_velocity(xhat, seg, &load.a, &load.b, eps, mu))
}

/// Unchecked form of [`stokeslet_segment`] taking the density coefficients.
#[inline]
pub fn stokeslet_velocity(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    split_sum(xhat, seg, a, b, eps, |s, a, b| stokeslet_direct(xhat, s, a, b, eps, mu))
}

fn stokeslet_direct(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    let t = stokeslet_integrals(&geom);
    stokeslet_sum(&geom, seg.v(), &t, a, b) * (seg.length() * mu.prefactor())
}

/// Velocity from a segment of regularized potential dipoles.
pub fn dipole_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
    variant: DipoleVariant,
) -> Result<Vec3> {
    load.expect("dipole_segment", LoadKind::Dipole)?;
    Ok(dipole_velocity(xhat, seg, &load.a, &load.b, eps, mu, variant))
}

#[inline]
pub fn dipole_velocity(
    xhat: &Vec3,
    seg: &Segment,
    a: &Vec3,
    b: &Vec3,
    eps: RegParam,
    mu: FluidParam,
    variant: DipoleVariant,
) -> Vec3 {
    split_sum(xhat, seg, a, b, eps, |s, a, b| dipole_direct(xhat, s, a, b, eps, mu, variant))
}

fn dipole_direct(
    xhat: &Vec3,
    seg: &Segment,
    a: &Vec3,
    b: &Vec3,
    eps: RegParam,
    mu: FluidParam,
    variant: DipoleVariant,
) -> Vec3 {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    let need = match variant {
        DipoleVariant::Standard => DIPOLE_ALL,
        DipoleVariant::Kirchhoff => KIRCHHOFF_ALL,
    };
    let t = table_from_closure(&geom, need);
    dipole_sum(&geom, seg.v(), &t, a, b, variant) * (seg.length() * mu.prefactor())
}

/// Velocity from a segment of regularized rotlets with linear torque density.
pub fn rotlet_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
) -> Result<Vec3> {
    load.expect("rotlet_segment", LoadKind::Torque)?;
    Ok(rotlet_velocity(xhat, seg, &load.a, &load.b, eps, mu))
}

#[inline]
pub fn rotlet_velocity(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    split_sum(xhat, seg, a, b, eps, |s, a, b| rotlet_direct(xhat, s, a, b, eps, mu))
}

fn rotlet_direct(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, mu: FluidParam) -> Vec3 {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    let t = table_from_closure(&geom, ROTLET_ALL);
    rotlet_sum(&geom, seg.v(), &t, a, b) * (seg.length() * mu.prefactor())
}

/// Curl of the velocity produced by a force or torque segment.
///
/// The curl of a regularized Stokeslet is the regularized rotlet with the
/// same strength, and the curl of a regularized rotlet is the Kirchhoff
/// dipole, so the result is a rotlet segment (force loads) or a Kirchhoff
/// dipole segment (torque loads). Half of it is the local angular velocity.
pub fn curl_segment(
    xhat: &Vec3,
    seg: &Segment,
    load: &SegmentLoad,
    eps: RegParam,
    mu: FluidParam,
) -> Result<Vec3> {
    match load.kind {
        LoadKind::Force => Ok(rotlet_velocity(xhat, seg, &load.a, &load.b, eps, mu)),
        LoadKind::Torque => Ok(dipole_velocity(
            xhat,
            seg,
            &load.a,
            &load.b,
            eps,
            mu,
            DipoleVariant::Kirchhoff,
        )),
        LoadKind::Dipole => Err(Error::LoadKindMismatch {
            op: "curl_segment",
            expected: "force or torque",
            got: "dipole",
        }),
    }
}

/// Pressure at `xhat` from a segment. Torque segments produce none.
pub fn pressure_segment(xhat: &Vec3, seg: &Segment, load: &SegmentLoad, eps: RegParam) -> Result<f64> {
    if load.kind == LoadKind::Torque {
        return Ok(0.0);
    }
    let kind = load.kind;
    Ok(split_sum(xhat, seg, &load.a, &load.b, eps, |s, a, b| {
        pressure_direct(xhat, s, a, b, eps, kind)
    }))
}

fn pressure_direct(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, kind: LoadKind) -> f64 {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    let v = seg.v();
    // (w.x) = c0 + c1 alpha + c2 alpha^2
    let c = [a.dot(&geom.x0), a.dot(v) + b.dot(&geom.x0), b.dot(v)];
    let t = table_from_closure(&geom, PRESSURE_ALL);
    let e2 = geom.eps2;
    let scale = seg.length() / (8.0 * PI);
    let sum: f64 = match kind {
        LoadKind::Force => (0..3)
            .map(|n| c[n] * (2.0 * t.t(n, -5) + 3.0 * e2 * t.t(n, -7)))
            .sum(),
        LoadKind::Dipole => -105.0 * e2 * e2 * (0..3).map(|n| c[n] * t.t(n, -9)).sum::<f64>(),
        LoadKind::Torque => 0.0,
    };
    sum * scale
}

/// Where `xhat` should be expanded from on `seg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Expansion {
    /// About `y0` as given.
    Forward,
    /// About `y1`, on the reversed segment.
    Reversed,
    /// Two pieces that both start at the foot `seg.point(alpha)` of the
    /// perpendicular, running to `y1` and to `y0`.
    Split { alpha: f64, ahead: Segment, behind: Segment },
}

/// The coefficients `(w.x0) x0` built about an end cancel by roughly the
/// square of (distance from the foot to that end) / (regularized distance),
/// so expand about the end nearer the foot, or split at the foot once the
/// regularized distance is below a tenth of the distance to either end.
pub(crate) fn expansion(xhat: &Vec3, seg: &Segment, eps: RegParam) -> Expansion {
    let v = seg.v();
    let l2 = seg.length() * seg.length();
    let alpha = -(xhat - seg.y0()).dot(v) / l2;
    if alpha > 0.0 && alpha < 1.0 {
        let foot = seg.point(alpha);
        let c2 = (xhat - foot).norm_squared() + eps.squared();
        let near = alpha.min(1.0 - alpha);
        if c2 < 0.01 * near * near * l2 {
            if let (Ok(ahead), Ok(behind)) = (Segment::new(foot, *seg.y1()), Segment::new(foot, *seg.y0())) {
                return Expansion::Split { alpha, ahead, behind };
            }
        }
    }
    if alpha > 0.5 {
        Expansion::Reversed
    } else {
        Expansion::Forward
    }
}

fn split_sum<T, F>(xhat: &Vec3, seg: &Segment, a: &Vec3, b: &Vec3, eps: RegParam, f: F) -> T
where
    T: std::ops::Add<Output = T>,
    F: Fn(&Segment, &Vec3, &Vec3) -> T,
{
    match expansion(xhat, seg, eps) {
        Expansion::Forward => f(seg, a, b),
        Expansion::Reversed => f(&seg.reversed(), &(a + b), &-b),
        Expansion::Split { alpha, ahead, behind } => {
            let at_foot = a + b * alpha;
            f(&ahead, &at_foot, &(b * (1.0 - alpha))) + f(&behind, &at_foot, &(-b * alpha))
        }
    }
}
