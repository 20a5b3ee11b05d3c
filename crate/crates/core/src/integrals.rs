//! The scalar line-integral family `T(n,q) = int_0^1 alpha^n R(alpha)^q dalpha`.
//!
//! Along a segment `y(alpha) = y0 - alpha v` the regularized distance obeys
//! `R(alpha)^2 = (s0 + alpha L)^2 + c^2`, where `s0 = x0.v / L` is the signed
//! axial coordinate of the evaluation point and `c^2 = |x0 x v|^2 / L^2 + eps^2`
//! its regularized perpendicular distance squared. The `n = 0` members are
//! computed in closed form; higher moments follow from the upward recursion
//!
//! ```text
//! T(n,q) = [alpha^(n-1) R^(q+2)]_0^1 / ((q+2) L^2)
//!        - (n-1) / ((q+2) L^2) T(n-2, q+2)
//!        - (x0.v / L^2) T(n-1, q)
//! ```
//!
//! Supported indices are `n <= 5` and odd `q` in `-9..=5`, restricted to the
//! set the recursion can reach (`q + 2 floor(n/2) <= 5`).
//!
//! Far from the segment the recursion loses roughly `2 n log10(d / L)`
//! digits. There the integrand is analytic on a wide Bernstein ellipse and a
//! fixed Gauss-Legendre rule is used instead.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::kernels::{RegParam, Vec3};

pub const MAX_N: usize = 5;
pub const MAX_Q: i32 = 5;
pub const MIN_Q: i32 = -9;
const NQ: usize = ((MAX_Q - MIN_Q) / 2 + 1) as usize;

/// Below this ratio `c^2 / s_min^2` the point sits far out on the segment's
/// axis, where the downshift relation cancels catastrophically; the `n = 0`
/// integrals are then summed from their binomial series instead.
const AXIAL_SERIES_RATIO: f64 = 0.25;

/// Straight segment `y(alpha) = y0 - alpha v`, `v = y0 - y1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    y0: Vec3,
    y1: Vec3,
    v: Vec3,
    length: f64,
}

impl Segment {
    pub fn new(y0: Vec3, y1: Vec3) -> Result<Self> {
        let v = y0 - y1;
        let length = v.norm();
        if length > 0.0 && length.is_finite() {
            Ok(Self { y0, y1, v, length })
        } else {
            Err(Error::DegenerateSegment(length))
        }
    }

    pub fn y0(&self) -> &Vec3 {
        &self.y0
    }

    pub fn y1(&self) -> &Vec3 {
        &self.y1
    }

    /// `y0 - y1`.
    pub fn v(&self) -> &Vec3 {
        &self.v
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn point(&self, alpha: f64) -> Vec3 {
        self.y0 - self.v * alpha
    }

    /// Same segment traversed from `y1` to `y0`.
    pub fn reversed(&self) -> Self {
        Self {
            y0: self.y1,
            y1: self.y0,
            v: -self.v,
            length: self.length,
        }
    }
}

/// Quantities shared by every integral for one (point, segment, eps) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentGeometry {
    pub x0: Vec3,
    pub x1: Vec3,
    pub r0: f64,
    pub r1: f64,
    /// `x0 . v`
    pub x0v: f64,
    /// `R0^2 - (x0.v)^2 / L^2`, evaluated as `|x0 x v|^2 / L^2 + eps^2`.
    pub c2: f64,
    pub length: f64,
    pub eps2: f64,
}

impl SegmentGeometry {
    pub fn new(xhat: &Vec3, seg: &Segment, eps: RegParam) -> Self {
        let eps2 = eps.squared();
        let x0 = xhat - seg.y0;
        let x1 = xhat - seg.y1;
        let l2 = seg.length * seg.length;
        Self {
            x0,
            x1,
            r0: (x0.norm_squared() + eps2).sqrt(),
            r1: (x1.norm_squared() + eps2).sqrt(),
            x0v: x0.dot(&seg.v),
            c2: x0.cross(&seg.v).norm_squared() / l2 + eps2,
            length: seg.length,
            eps2,
        }
    }

    /// Signed axial coordinates of the two endpoints, `s(alpha) = x(alpha).v / L`.
    #[inline]
    pub fn axial(&self) -> (f64, f64) {
        let s0 = self.x0v / self.length;
        (s0, s0 + self.length)
    }

    /// `R(alpha)` from the explicit parametrization `x(alpha) = x0 + alpha v`.
    pub fn r_at(&self, alpha: f64, v: &Vec3) -> f64 {
        ((self.x0 + v * alpha).norm_squared() + self.eps2).sqrt()
    }

    /// Residual of `L^2 R^2 - (x.v)^2 = L^2 c^2` at `alpha`.
    pub fn identity_residual(&self, alpha: f64, v: &Vec3) -> f64 {
        let x = self.x0 + v * alpha;
        let l2 = self.length * self.length;
        l2 * (x.norm_squared() + self.eps2) - x.dot(v).powi(2) - l2 * self.c2
    }
}

#[inline]
fn q_index(q: i32) -> Option<usize> {
    if (MIN_Q..=MAX_Q).contains(&q) && q % 2 != 0 {
        Some(((MAX_Q - q) / 2) as usize)
    } else {
        None
    }
}

#[inline]
const fn q_of(index: usize) -> i32 {
    MAX_Q - 2 * index as i32
}

/// Whether `T(n,q)` is reachable by the recursion from the closed-form base cases.
pub fn is_supported(n: usize, q: i32) -> bool {
    n <= MAX_N && q_index(q).is_some() && q + 2 * (n / 2) as i32 <= MAX_Q
}

/// A set of `(n, q)` indices, stored as a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IndexSet(u64);

impl IndexSet {
    /// Terms used by the Stokeslet segment and the mobility blocks.
    pub const STOKESLET: Self = Self::from_pairs(&[(0, -1), (1, -1), (0, -3), (1, -3), (2, -3), (3, -3)]);
    /// Terms used by the rotlet segment (and the curl of the Stokeslet segment).
    pub const ROTLET: Self = Self::from_pairs(&[(0, -3), (1, -3), (2, -3), (0, -5), (1, -5), (2, -5)]);
    /// Terms used by the standard dipole segment.
    pub const DIPOLE: Self = Self::from_pairs(&[(0, -3), (1, -3), (0, -5), (1, -5), (2, -5), (3, -5)]);
    /// Terms used by the Kirchhoff dipole segment (and the curl of the rotlet segment).
    pub const KIRCHHOFF: Self = Self::from_pairs(&[
        (0, -3),
        (1, -3),
        (0, -5),
        (1, -5),
        (2, -5),
        (3, -5),
        (0, -7),
        (1, -7),
        (2, -7),
        (3, -7),
    ]);
    /// Everything the plane-wall image system needs.
    pub const IMAGE: Self = Self::from_pairs(&[
        (0, -1),
        (1, -1),
        (0, -3),
        (1, -3),
        (2, -3),
        (3, -3),
        (4, -3),
        (5, -3),
        (0, -5),
        (1, -5),
        (2, -5),
        (3, -5),
        (4, -5),
        (5, -5),
    ]);
    /// Terms for the Stokeslet and dipole pressures.
    pub const PRESSURE: Self = Self::from_pairs(&[
        (0, -5),
        (1, -5),
        (2, -5),
        (0, -7),
        (1, -7),
        (2, -7),
        (0, -9),
        (1, -9),
        (2, -9),
    ]);

    const fn bit(n: usize, q: i32) -> u64 {
        1u64 << (n * NQ + ((MAX_Q - q) / 2) as usize)
    }

    const fn from_pairs(pairs: &[(usize, i32)]) -> Self {
        let mut bits = 0u64;
        let mut i = 0;
        while i < pairs.len() {
            bits |= Self::bit(pairs[i].0, pairs[i].1);
            i += 1;
        }
        Self(bits)
    }

    pub fn new() -> Self {
        Self(0)
    }

    pub fn from_indices(pairs: &[(usize, i32)]) -> Result<Self> {
        let mut set = Self::new();
        for &(n, q) in pairs {
            set.insert(n, q)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, n: usize, q: i32) -> Result<()> {
        if !is_supported(n, q) {
            return Err(Error::UnsupportedIndex { n, q });
        }
        self.0 |= Self::bit(n, q);
        Ok(())
    }

    pub fn contains(&self, n: usize, q: i32) -> bool {
        is_supported(n, q) && self.0 & Self::bit(n, q) != 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub const fn union_const(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i32)> + '_ {
        (0..=MAX_N).flat_map(move |n| {
            (0..NQ).filter_map(move |qi| {
                let q = q_of(qi);
                self.contains(n, q).then_some((n, q))
            })
        })
    }

    /// The set plus everything the recursion needs to produce it. The
    /// anchors `T(0,-1)` and `T(0,-3)` are always included: every other
    /// `n = 0` term is shifted from them.
    pub const fn closure(self) -> Self {
        let mut bits = self.0;
        let mut n = MAX_N;
        while n >= 1 {
            let mut qi = 0;
            while qi < NQ {
                let q = q_of(qi);
                if bits & Self::bit(n, q) != 0 {
                    bits |= Self::bit(n - 1, q);
                    if n >= 2 {
                        bits |= Self::bit(n - 2, q + 2);
                    }
                }
                qi += 1;
            }
            n -= 1;
        }
        bits |= Self::bit(0, -1) | Self::bit(0, -3);
        // the n = 0 chain is walked outward from the anchors
        let mut hi = NQ;
        let mut lo = 0;
        let mut qi = 0;
        while qi < NQ {
            if bits & Self::bit(0, q_of(qi)) != 0 {
                if hi == NQ {
                    hi = qi;
                }
                lo = qi;
            }
            qi += 1;
        }
        let mut qi = hi;
        while qi <= lo {
            bits |= Self::bit(0, q_of(qi));
            qi += 1;
        }
        Self(bits)
    }
}

/// Values of `T(n,q)` for one (point, segment, eps) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TnqTable {
    values: [[f64; NQ]; MAX_N + 1],
    present: IndexSet,
}

impl Default for TnqTable {
    fn default() -> Self {
        Self {
            values: [[f64::NAN; NQ]; MAX_N + 1],
            present: IndexSet::new(),
        }
    }
}

impl TnqTable {
    pub fn get(&self, n: usize, q: i32) -> Result<f64> {
        if !is_supported(n, q) {
            return Err(Error::UnsupportedIndex { n, q });
        }
        if !self.present.contains(n, q) {
            return Err(Error::MissingDependency { n, q });
        }
        Ok(self.values[n][((MAX_Q - q) / 2) as usize])
    }

    /// Unchecked lookup for kernels that built the table from a known set.
    #[inline]
    pub fn t(&self, n: usize, q: i32) -> f64 {
        debug_assert!(self.present.contains(n, q), "T({n},{q}) not computed");
        self.values[n][((MAX_Q - q) / 2) as usize]
    }

    pub fn contains(&self, n: usize, q: i32) -> bool {
        self.present.contains(n, q)
    }

    pub fn indices(&self) -> IndexSet {
        self.present
    }

    #[inline]
    fn set(&mut self, n: usize, q: i32, value: f64) {
        self.values[n][((MAX_Q - q) / 2) as usize] = value;
        self.present.0 |= IndexSet::bit(n, q);
    }
}

/// Integrals `J(q) = int_{s0}^{s1} (s^2 + c^2)^{q/2} ds` (so `T(0,q) = J(q) / L`)
/// in a frame where `s1 > 0`. Reflection `s -> -s` leaves `J` unchanged.
#[derive(Debug, Clone, Copy)]
struct AxialFrame {
    s0: f64,
    s1: f64,
    r0: f64,
    r1: f64,
    c2: f64,
    length: f64,
}

impl AxialFrame {
    fn new(geom: &SegmentGeometry) -> Self {
        let (s0, s1) = geom.axial();
        if s1 <= 0.0 {
            Self {
                s0: -s1,
                s1: -s0,
                r0: geom.r1,
                r1: geom.r0,
                c2: geom.c2,
                length: geom.length,
            }
        } else {
            Self {
                s0,
                s1,
                r0: geom.r0,
                r1: geom.r1,
                c2: geom.c2,
                length: geom.length,
            }
        }
    }

    /// Point ahead of the segment with a small perpendicular offset.
    fn use_series(&self) -> bool {
        self.s0 > 0.0 && self.c2 < AXIAL_SERIES_RATIO * self.s0 * self.s0
    }

    fn j_minus1(&self) -> f64 {
        if self.s0 >= 0.0 {
            // log((R1 + s1) / (R0 + s0)) with the ratio minus one formed
            // without cancellation: R1 - R0 = L (s0 + s1) / (R0 + R1).
            let rs = self.r0 + self.r1;
            let ratio = self.length * (rs + self.s0 + self.s1) / (rs * (self.r0 + self.s0));
            ratio.ln_1p()
        } else {
            let c = self.c2.sqrt();
            (self.s1 / c).asinh() + (-self.s0 / c).asinh()
        }
    }

    fn j_minus3(&self) -> f64 {
        if self.s0 >= 0.0 {
            1.0 / (self.r0 * (self.r0 + self.s0)) - 1.0 / (self.r1 * (self.r1 + self.s1))
        } else {
            (self.s1 / self.r1 - self.s0 / self.r0) / self.c2
        }
    }

    /// `[s R^q]_{s0}^{s1}`
    fn boundary(&self, q: i32) -> f64 {
        self.s1 * self.r1.powi(q) - self.s0 * self.r0.powi(q)
    }

    fn shift_down(&self, jq: f64, q: i32) -> f64 {
        ((1 + q) as f64 * jq - self.boundary(q)) / (q as f64 * self.c2)
    }

    fn shift_up(&self, jq_minus2: f64, q: i32) -> f64 {
        (q as f64 * self.c2 * jq_minus2 + self.boundary(q)) / (1 + q) as f64
    }

    /// Binomial series of `(s^2 + c^2)^{q/2} = s^q (1 + c^2/s^2)^{q/2}`,
    /// valid for `0 < s0 < s1` and fast when `c^2 / s0^2` is small.
    ///
    /// Term `k` needs `int s^p ds = s0^m expm1(m lr) / m` with `p = q - 2k`,
    /// `m = p + 1`, `lr = ln(s1 / s0)`. For `m < 0` the `expm1` factors follow
    /// `E(m - 2) = E(m) e^{-2 lr} + expm1(-2 lr)`, a sum of same-sign terms.
    fn j_series(&self, q: i32) -> f64 {
        let half = q as f64 / 2.0;
        let lr = (self.length / self.s0).ln_1p();
        let h = (-2.0 * lr).exp_m1();
        let g = h + 1.0;
        let inv_s02 = 1.0 / (self.s0 * self.s0);
        let mut m = q + 1;
        let mut sp = self.s0.powi(m);
        let mut e = (m as f64 * lr).exp_m1();
        let mut binom = 1.0;
        let mut c2k = 1.0;
        let mut sum = 0.0;
        for k in 0..120 {
            let power_integral = if m == 0 { lr } else { sp * e / m as f64 };
            let term = binom * c2k * power_integral;
            sum += term;
            if k > 1 && term.abs() <= 1e-18 * sum.abs() {
                break;
            }
            binom *= (half - k as f64) / (k + 1) as f64;
            c2k *= self.c2;
            m -= 2;
            sp *= inv_s02;
            e = match m {
                m if m > 0 => (m as f64 * lr).exp_m1(),
                0 => 0.0,
                -2 => h,
                _ => e * g + h,
            };
        }
        sum
    }
}

/// Closed-form `n = 0` terms `T(0,1)`, `T(0,-1)`, `T(0,-3)`.
pub fn base_cases(geom: &SegmentGeometry) -> Result<TnqTable> {
    check_length(geom)?;
    let frame = AxialFrame::new(geom);
    let inv_l = 1.0 / geom.length;
    let mut table = TnqTable::default();
    if frame.use_series() {
        for q in [1, -1, -3] {
            table.set(0, q, frame.j_series(q) * inv_l);
        }
    } else {
        let jm1 = frame.j_minus1();
        table.set(0, -1, jm1 * inv_l);
        table.set(0, -3, frame.j_minus3() * inv_l);
        table.set(0, 1, frame.shift_up(jm1, 1) * inv_l);
    }
    Ok(table)
}

/// `T(0, q-2)` from `T(0, q)`:
/// `T(0,q-2) = [L^2 (1+q) T(0,q) - [(x.v) R^q]_0^1] / (q L^2 c^2)`.
pub fn downshift_q(t0q: f64, geom: &SegmentGeometry, q: i32) -> Result<f64> {
    check_length(geom)?;
    if q == 0 {
        return Err(Error::UnsupportedIndex { n: 0, q: -2 });
    }
    let frame = AxialFrame::new(geom);
    Ok(frame.shift_down(t0q * geom.length, q) / geom.length)
}

/// One step of the upward recursion in `n`, reading `T(n-1,q)` and
/// `T(n-2,q+2)` from `table`.
pub fn recurse(table: &TnqTable, geom: &SegmentGeometry, n: usize, q: i32) -> Result<f64> {
    check_length(geom)?;
    if n == 0 || !is_supported(n, q) {
        return Err(Error::UnsupportedIndex { n, q });
    }
    let prev = table.get(n - 1, q)?;
    let lower = if n >= 2 { Some(table.get(n - 2, q + 2)?) } else { None };
    Ok(recurrence_step(geom, n, q, prev, lower))
}

/// `R1^p - R0^p` without cancellation, through `R1 - R0 = (2 x0.v + L^2) / (R0 + R1)`.
#[inline]
fn power_difference(geom: &SegmentGeometry, p: i32) -> f64 {
    let (r0, r1) = (geom.r0, geom.r1);
    let delta = (2.0 * geom.x0v + geom.length * geom.length) / (r0 + r1);
    let m = p.unsigned_abs() as i32;
    let mut sum = 0.0;
    for i in 0..m {
        sum += r1.powi(i) * r0.powi(m - 1 - i);
    }
    if p > 0 {
        delta * sum
    } else {
        -delta * sum / (r0 * r1).powi(m)
    }
}

#[inline]
fn recurrence_step(geom: &SegmentGeometry, n: usize, q: i32, prev: f64, lower: Option<f64>) -> f64 {
    let p = q + 2;
    let l2 = geom.length * geom.length;
    let scale = 1.0 / (p as f64 * l2);
    let edge = if n == 1 { power_difference(geom, p) } else { geom.r1.powi(p) };
    let mut t = edge * scale - geom.x0v / l2 * prev;
    if let Some(lower) = lower {
        t -= (n - 1) as f64 * scale * lower;
    }
    t
}

/// The six integrals behind a Stokeslet segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesletIntegrals {
    pub t0m1: f64,
    pub t1m1: f64,
    pub t0m3: f64,
    pub t1m3: f64,
    pub t2m3: f64,
    pub t3m3: f64,
}

impl StokesletIntegrals {
    /// Pull the six entries out of a table that contains them.
    pub fn from_table(t: &TnqTable) -> Self {
        Self {
            t0m1: t.t(0, -1),
            t1m1: t.t(1, -1),
            t0m3: t.t(0, -3),
            t1m3: t.t(1, -3),
            t2m3: t.t(2, -3),
            t3m3: t.t(3, -3),
        }
    }
}

const MAX_RULE: usize = 20;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
struct GaussRule {
    nodes: [f64; MAX_RULE],
    weights: [f64; MAX_RULE],
    len: usize,
}

impl GaussRule {
    fn new(m: usize) -> Self {
        let mut rule = Self {
            nodes: [0.0; MAX_RULE],
            weights: [0.0; MAX_RULE],
            len: m,
        };
        let mf = m as f64;
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=m {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = mf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.nodes[i] = 0.5 * (1.0 - x);
            rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
        }
        rule
    }
}

/// `(squared distance threshold, rule)`, widest first.
fn far_rules() -> &'static [(f64, GaussRule); 3] {
    static RULES: OnceLock<[(f64, GaussRule); 3]> = OnceLock::new();
    RULES.get_or_init(|| [(100.0, GaussRule::new(8)), (9.0, GaussRule::new(12)), (1.0, GaussRule::new(20))])
}

/// Rule for points whose zeros of `R^2` (at `alpha = -x0.v / L^2 +- i c / L`)
/// are at least one unit from `[0, 1]`.
#[inline]
fn far_rule(geom: &SegmentGeometry) -> Option<&'static GaussRule> {
    let l2 = geom.length * geom.length;
    let centre = -geom.x0v / l2;
    let dx = (-centre).max(centre - 1.0).max(0.0);
    let d2 = dx * dx + geom.c2 / l2;
    if d2 < 1.0 {
        return None;
    }
    far_rules().iter().find(|(t, _)| d2 >= *t).map(|(_, r)| r)
}

/// `(1 / R, R^2)` at node `alpha`, with `R^2 = (s0 + alpha L)^2 + c^2`.
#[inline]
fn node_radius(geom: &SegmentGeometry, alpha: f64) -> (f64, f64) {
    let s = geom.x0v / geom.length + alpha * geom.length;
    let r2 = s * s + geom.c2;
    (1.0 / r2.sqrt(), r2)
}

fn gauss_table(geom: &SegmentGeometry, all: IndexSet, rule: &GaussRule) -> TnqTable {
    let mut table = TnqTable::default();
    for row in table.values.iter_mut() {
        row.fill(0.0);
    }
    for i in 0..rule.len {
        let (alpha, w) = (rule.nodes[i], rule.weights[i]);
        let (ri, r2) = node_radius(geom, alpha);
        let mut pw = [0.0; NQ];
        // q = 1 sits at index 2, q = -1 at index 3
        pw[2] = r2 * ri;
        pw[1] = pw[2] * r2;
        pw[0] = pw[1] * r2;
        pw[3] = ri;
        let ri2 = ri * ri;
        for qi in 4..NQ {
            pw[qi] = pw[qi - 1] * ri2;
        }
        let mut an = w;
        for n in 0..=MAX_N {
            for qi in 0..NQ {
                if all.0 & (1u64 << (n * NQ + qi)) != 0 {
                    table.values[n][qi] += an * pw[qi];
                }
            }
            an *= alpha;
        }
    }
    table.present = all;
    table
}

/// Direct evaluation of [`IndexSet::STOKESLET`] for the hot loops, without
/// the general table bookkeeping. Agrees with [`table_from_geometry`] to
/// round-off.
#[inline]
pub fn stokeslet_integrals(geom: &SegmentGeometry) -> StokesletIntegrals {
    if let Some(rule) = far_rule(geom) {
        let mut t = [0.0; 6];
        for i in 0..rule.len {
            let (alpha, w) = (rule.nodes[i], rule.weights[i]);
            let (ri, _) = node_radius(geom, alpha);
            let (a1, a3) = (w * ri, w * ri * ri * ri);
            t[0] += a1;
            t[1] += a1 * alpha;
            t[2] += a3;
            t[3] += a3 * alpha;
            t[4] += a3 * alpha * alpha;
            t[5] += a3 * alpha * alpha * alpha;
        }
        return StokesletIntegrals {
            t0m1: t[0],
            t1m1: t[1],
            t0m3: t[2],
            t1m3: t[3],
            t2m3: t[4],
            t3m3: t[5],
        };
    }
    let frame = AxialFrame::new(geom);
    let inv_l = 1.0 / geom.length;
    let l2 = geom.length * geom.length;
    let a = geom.x0v / l2;
    let t0m1 = frame.j_minus1() * inv_l;
    let t0m3 = frame.j_minus3() * inv_l;
    let delta = (2.0 * geom.x0v + l2) / (geom.r0 + geom.r1);
    // n = 1: p = 1 and p = -1 edges
    let t1m1 = delta / l2 - a * t0m1;
    let t1m3 = delta / (geom.r0 * geom.r1 * l2) - a * t0m3;
    // n = 2, 3 with q = -3 (p = -1)
    let inv_r1 = 1.0 / geom.r1;
    let t2m3 = -inv_r1 / l2 - a * t1m3 + t0m1 / l2;
    let t3m3 = -inv_r1 / l2 - a * t2m3 + 2.0 * t1m1 / l2;
    StokesletIntegrals {
        t0m1,
        t1m1,
        t0m3,
        t1m3,
        t2m3,
        t3m3,
    }
}

/// Table for one evaluation point: the requested entries plus their
/// dependencies.
pub fn build_table(xhat: &Vec3, seg: &Segment, eps: RegParam, need: IndexSet) -> TnqTable {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    table_from_geometry(&geom, need)
}

/// Same as [`build_table`] but validating a caller-supplied index list.
pub fn build_table_checked(
    xhat: &Vec3,
    seg: &Segment,
    eps: RegParam,
    need: &[(usize, i32)],
) -> Result<TnqTable> {
    let set = IndexSet::from_indices(need)?;
    Ok(build_table(xhat, seg, eps, set))
}

pub fn table_from_geometry(geom: &SegmentGeometry, need: IndexSet) -> TnqTable {
    table_from_closure(geom, need.closure())
}

/// Like [`table_from_geometry`] for a set that is already closed under
/// the recursion's dependencies (see [`IndexSet::closure`]).
#[inline]
pub(crate) fn table_from_closure(geom: &SegmentGeometry, all: IndexSet) -> TnqTable {
    debug_assert_eq!(all, all.closure());
    if let Some(rule) = far_rule(geom) {
        return gauss_table(geom, all, rule);
    }
    let frame = AxialFrame::new(geom);
    let inv_l = 1.0 / geom.length;
    let mut table = TnqTable::default();

    if frame.use_series() {
        for qi in 0..NQ {
            let q = q_of(qi);
            if all.contains(0, q) {
                table.set(0, q, frame.j_series(q) * inv_l);
            }
        }
    } else {
        let jm1 = frame.j_minus1();
        let jm3 = frame.j_minus3();
        table.set(0, -1, jm1 * inv_l);
        table.set(0, -3, jm3 * inv_l);
        let mut j = jm1;
        let mut q = 1;
        while q <= MAX_Q && all.contains(0, q) {
            j = frame.shift_up(j, q);
            table.set(0, q, j * inv_l);
            q += 2;
        }
        let mut j = jm3;
        let mut q = -3;
        while q - 2 >= MIN_Q && all.contains(0, q - 2) {
            j = frame.shift_down(j, q);
            table.set(0, q - 2, j * inv_l);
            q -= 2;
        }
    }

    // Ascending bit order visits n in increasing order, so dependencies
    // are always filled first.
    let mut bits = all.0 >> NQ;
    let mut offset = NQ;
    while bits != 0 {
        let skip = bits.trailing_zeros() as usize;
        let i = offset + skip;
        let (n, q) = (i / NQ, q_of(i % NQ));
        let prev = table.t(n - 1, q);
        let lower = (n >= 2).then(|| table.t(n - 2, q + 2));
        table.set(n, q, recurrence_step(geom, n, q, prev, lower));
        bits >>= skip + 1;
        offset = i + 1;
    }
    table
}

/// `T(n,q)` for `n <= 3`, `q in {-1, -3, -5, -7}` (what a force plus torque
/// segment and its curl need), walked in a fixed order.
pub(crate) fn rod_table(geom: &SegmentGeometry) -> TnqTable {
    if let Some(rule) = far_rule(geom) {
        return rod_gauss(geom, rule);
    }
    let frame = AxialFrame::new(geom);
    let inv_l = 1.0 / geom.length;
    let mut table = TnqTable::default();
    table.set(0, -1, frame.j_minus1() * inv_l);
    let mut j = frame.j_minus3();
    table.set(0, -3, j * inv_l);
    for q in [-3, -5] {
        j = if frame.use_series() {
            frame.j_series(q - 2)
        } else {
            frame.shift_down(j, q)
        };
        table.set(0, q - 2, j * inv_l);
    }
    table.set(1, -1, recurrence_step(geom, 1, -1, table.t(0, -1), None));
    for q in [-3, -5, -7] {
        table.set(1, q, recurrence_step(geom, 1, q, table.t(0, q), None));
        for n in 2..=3 {
            let lower = table.t(n - 2, q + 2);
            table.set(n, q, recurrence_step(geom, n, q, table.t(n - 1, q), Some(lower)));
        }
    }
    table
}

fn rod_gauss(geom: &SegmentGeometry, rule: &GaussRule) -> TnqTable {
    // acc[n][j] holds T(n, -1 - 2j)
    let mut acc = [[0.0; 4]; 4];
    for i in 0..rule.len {
        let (alpha, w) = (rule.nodes[i], rule.weights[i]);
        let (ri, _) = node_radius(geom, alpha);
        let ri2 = ri * ri;
        let mut an = w;
        for row in acc.iter_mut() {
            let mut p = an * ri;
            for v in row.iter_mut() {
                *v += p;
                p *= ri2;
            }
            an *= alpha;
        }
    }
    let mut table = TnqTable::default();
    for (n, row) in acc.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            table.set(n, -1 - 2 * j as i32, *v);
        }
    }
    table
}

#[cfg(test)]
pub(crate) const ROD_SET: IndexSet = IndexSet::STOKESLET
    .union_const(IndexSet::ROTLET)
    .union_const(IndexSet::KIRCHHOFF)
    .closure();

fn check_length(geom: &SegmentGeometry) -> Result<()> {
    if geom.length > 0.0 {
        Ok(())
    } else {
        Err(Error::DegenerateSegment(geom.length))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use segstokes_oracle::integrate_scalar;

    fn quad(geom: &SegmentGeometry, v: &Vec3, n: usize, q: i32) -> f64 {
        integrate_scalar(|a| a.powi(n as i32) * geom.r_at(a, v).powi(q), 0.0, 1.0, 1e-15).0
    }

    fn unit_setup(xhat: Vec3) -> (Segment, SegmentGeometry) {
        let seg = Segment::new(Vec3::zeros(), Vec3::x()).unwrap();
        let geom = SegmentGeometry::new(&xhat, &seg, RegParam::new(1.0).unwrap());
        (seg, geom)
    }

    #[test]
    fn rod_table_matches_quadrature() {
        let seg = Segment::new(Vec3::new(0.1, 0.2, -0.3), Vec3::new(0.15, 0.21, -0.25)).unwrap();
        for xhat in [Vec3::new(0.12, 0.2, -0.28), Vec3::new(1.0, 0.5, 0.2), Vec3::new(0.2, 0.22, -0.15), Vec3::zeros()] {
            let geom = SegmentGeometry::new(&xhat, &seg, RegParam::new(0.005).unwrap());
            let fast = rod_table(&geom);
            let slow = table_from_closure(&geom, ROD_SET);
            for (n, q) in ROD_SET.iter() {
                let exact = quad(&geom, seg.v(), n, q);
                for t in [fast.t(n, q), slow.t(n, q)] {
                    assert!((t - exact).abs() <= 1e-10 * exact.abs(), "T({n},{q}): {t} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn degenerate_segment_rejected() {
        let p = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(Segment::new(p, p), Err(Error::DegenerateSegment(0.0)));
    }

    #[test]
    fn base_case_at_endpoint() {
        let (_, geom) = unit_setup(Vec3::zeros());
        let t = base_cases(&geom).unwrap();
        assert!((t.get(0, -1).unwrap() - 1f64.asinh()).abs() < 1e-15);
        assert!((t.get(0, -1).unwrap() - 0.881374).abs() < 1e-6);
        assert!((t.get(0, -3).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!(t.get(1, -1).is_err());
    }

    #[test]
    fn base_case_far_field() {
        let seg = Segment::new(Vec3::zeros(), Vec3::x()).unwrap();
        let geom = SegmentGeometry::new(&Vec3::new(0.0, 1e3, 0.0), &seg, RegParam::new(0.01).unwrap());
        let t = base_cases(&geom).unwrap().get(0, -1).unwrap();
        assert!((t - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn downshift_matches_quadrature() {
        let (seg, geom) = unit_setup(Vec3::zeros());
        let t03 = base_cases(&geom).unwrap().get(0, -3).unwrap();
        let t05 = downshift_q(t03, &geom, -3).unwrap();
        assert!((t05 - quad(&geom, seg.v(), 0, -5)).abs() < 1e-12);
        // closed form at the endpoint: int_0^1 (a^2+1)^{-5/2} = (1/sqrt2)(1 - 1/6)
        assert!((t05 - (1.0 - 1.0 / 6.0) / 2f64.sqrt()).abs() < 1e-14);

        let (seg, geom) = unit_setup(Vec3::new(0.5, 0.7, 0.0));
        let t03 = base_cases(&geom).unwrap().get(0, -3).unwrap();
        let t05 = downshift_q(t03, &geom, -3).unwrap();
        assert!((t05 - quad(&geom, seg.v(), 0, -5)).abs() < 1e-12 * t05);
    }

    #[test]
    fn downshift_reproduces_t03() {
        for xhat in [Vec3::zeros(), Vec3::new(0.4, 0.3, -0.2), Vec3::new(2.0, 0.1, 0.0)] {
            let (_, geom) = unit_setup(xhat);
            let base = base_cases(&geom).unwrap();
            let t03 = downshift_q(base.get(0, -1).unwrap(), &geom, -1).unwrap();
            assert!((t03 - base.get(0, -3).unwrap()).abs() < 1e-13 * t03);
        }
    }

    #[test]
    fn recursion_matches_printed_t1m1() {
        let seg = Segment::new(Vec3::new(0.1, -0.3, 0.2), Vec3::new(1.2, 0.4, -0.1)).unwrap();
        let geom = SegmentGeometry::new(&Vec3::new(0.5, 0.6, 0.3), &seg, RegParam::new(0.2).unwrap());
        let base = base_cases(&geom).unwrap();
        let t1 = recurse(&base, &geom, 1, -1).unwrap();
        let l2 = geom.length * geom.length;
        let printed = (geom.r1 - geom.r0) / l2 - geom.x0v / l2 * base.get(0, -1).unwrap();
        assert!((t1 - printed).abs() < 1e-15 * t1.abs().max(1.0));
    }

    #[test]
    fn recursion_requires_dependencies() {
        let (_, geom) = unit_setup(Vec3::new(0.3, 0.3, 0.3));
        let base = base_cases(&geom).unwrap();
        assert_eq!(
            recurse(&base, &geom, 2, -5),
            Err(Error::MissingDependency { n: 1, q: -5 })
        );
        assert!(recurse(&base, &geom, 0, -3).is_err());
    }

    #[test]
    fn mirrored_segment_gives_mirrored_moment() {
        // Point above the midpoint: T(2,-5) on the segment equals
        // int (1-a)^2 R^-5 on the reversed one = T0 - 2 T1 + T2.
        let seg = Segment::new(Vec3::zeros(), Vec3::new(2.0, 0.0, 0.0)).unwrap();
        let eps = RegParam::new(0.05).unwrap();
        let xhat = Vec3::new(1.0, 0.3, 0.0);
        let a = build_table(&xhat, &seg, eps, IndexSet::ROTLET);
        let b = build_table(&xhat, &seg.reversed(), eps, IndexSet::ROTLET);
        let mirrored = b.t(0, -5) - 2.0 * b.t(1, -5) + b.t(2, -5);
        assert!((a.t(2, -5) - mirrored).abs() < 1e-12 * a.t(2, -5));
        let geom = SegmentGeometry::new(&xhat, &seg, eps);
        assert!((a.t(2, -5) - quad(&geom, seg.v(), 2, -5)).abs() < 1e-10 * a.t(2, -5));
    }

    #[test]
    fn single_request_has_no_recursion() {
        let seg = Segment::new(Vec3::zeros(), Vec3::x()).unwrap();
        let set = IndexSet::from_indices(&[(0, -1)]).unwrap();
        let t = build_table(&Vec3::new(0.2, 0.2, 0.0), &seg, RegParam::new(0.1).unwrap(), set);
        assert!(t.contains(0, -1));
        for n in 1..=MAX_N {
            for q in [-1, -3, -5] {
                assert!(!t.contains(n, q));
            }
        }
    }

    #[test]
    fn rotlet_set_contains_exactly_needed() {
        let seg = Segment::new(Vec3::zeros(), Vec3::x()).unwrap();
        let need = IndexSet::from_indices(&[
            (0, -1),
            (1, -1),
            (0, -3),
            (1, -3),
            (2, -3),
            (0, -5),
            (1, -5),
            (2, -5),
        ])
        .unwrap();
        let t = build_table(&Vec3::new(0.2, 0.2, 0.0), &seg, RegParam::new(0.1).unwrap(), need);
        let got: Vec<_> = t.indices().iter().collect();
        let mut expected: Vec<_> = need.iter().collect();
        expected.sort();
        let mut got_sorted = got.clone();
        got_sorted.sort();
        assert_eq!(got_sorted, expected);
    }

    #[test]
    fn unsupported_indices() {
        assert!(IndexSet::from_indices(&[(6, -3)]).is_err());
        assert!(IndexSet::from_indices(&[(0, -2)]).is_err());
        assert!(IndexSet::from_indices(&[(0, -11)]).is_err());
        assert!(IndexSet::from_indices(&[(2, 5)]).is_err());
        assert!(IndexSet::from_indices(&[(5, 1)]).is_ok());
    }

    #[test]
    fn identity_three_holds() {
        let seg = Segment::new(Vec3::new(0.3, -1.0, 0.5), Vec3::new(-0.4, 0.2, 1.1)).unwrap();
        let geom = SegmentGeometry::new(&Vec3::new(1.0, 2.0, -0.5), &seg, RegParam::new(0.3).unwrap());
        let scale = geom.length.powi(2) * geom.r0.powi(2);
        for a in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert!(geom.identity_residual(a, seg.v()).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn stokeslet_fast_path_matches_table() {
        let seg = Segment::new(Vec3::new(0.2, -0.1, 0.3), Vec3::new(-0.5, 0.4, 0.1)).unwrap();
        let eps = RegParam::new(0.02).unwrap();
        let points = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.2, -0.1, 0.3),
            Vec3::new(-0.5, 0.4, 0.1),
            Vec3::new(3.0, -2.0, 1.0),
            // near the extended axis, ahead and behind
            Vec3::new(0.2, -0.1, 0.3) + (Vec3::new(0.2, -0.1, 0.3) - Vec3::new(-0.5, 0.4, 0.1)) * 4.0,
            Vec3::new(-0.5, 0.4, 0.1) - (Vec3::new(0.2, -0.1, 0.3) - Vec3::new(-0.5, 0.4, 0.1)) * 2.5,
        ];
        for p in points {
            let geom = SegmentGeometry::new(&p, &seg, eps);
            let fast = stokeslet_integrals(&geom);
            let t = table_from_geometry(&geom, IndexSet::STOKESLET);
            let pairs = [
                (fast.t0m1, t.t(0, -1)),
                (fast.t1m1, t.t(1, -1)),
                (fast.t0m3, t.t(0, -3)),
                (fast.t1m3, t.t(1, -3)),
                (fast.t2m3, t.t(2, -3)),
                (fast.t3m3, t.t(3, -3)),
            ];
            for (a, b) in pairs {
                assert!((a - b).abs() <= 1e-12 * b.abs(), "{a} vs {b} at {p:?}");
            }
        }
    }
}
