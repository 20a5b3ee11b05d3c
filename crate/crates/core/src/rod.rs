//! Kirchhoff rod with director frames, immersed through force and torque
//! segments.
//!
//! Internal force and couple live on the half points `s_{k+1/2}`:
//!
//! ```text
//! Q1 = a1 (D2' . D3 - Omega1),  Q2 = a2 (D3' . D1 - Omega2),  Q3 = a3 (D1' . D2 - Omega3)
//! F_i = b_i (X' . D_i - delta_3i)
//! ```
//!
//! and the fluid loads on the rod at the nodes follow from
//! `0 = f + F'` and `0 = tau + T' + X' x F` with free ends (`F = T = 0`
//! beyond the tips). End nodes own half a link, so their densities are
//! doubled; the discrete loads then have exactly zero net force and torque.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrals::{rod_table, Segment, SegmentGeometry, StokesletIntegrals};
use crate::kernels::{DipoleVariant, FluidParam, RegParam, Vec3};
use crate::planar::{Integrator, TargetCurvature};
use crate::segment::{dipole_sum, rotlet_sum, stokeslet_sum};

/// Drift above which a single step is considered to have broken a frame.
pub const FRAME_DRIFT_LIMIT: f64 = 1e-4;

/// Orthonormal director triad `{D1, D2, D3}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame(pub [Vec3; 3]);

impl Frame {
    pub fn identity() -> Self {
        Self([Vec3::x(), Vec3::y(), Vec3::z()])
    }

    #[inline]
    pub fn d(&self, i: usize) -> &Vec3 {
        &self.0[i]
    }

    /// Largest `|D_i . D_j - delta_ij|`, plus the deviation of the
    /// orientation from right-handed.
    pub fn drift(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.0[i].dot(&self.0[j]) - target).abs());
            }
        }
        let det = self.0[0].cross(&self.0[1]).dot(&self.0[2]);
        worst.max((det - 1.0).abs())
    }

    /// Modified Gram-Schmidt starting from `D3`, then `D1`; `D2 = D3 x D1`.
    pub fn orthonormalized(&self) -> Self {
        let d3 = self.0[2].normalize();
        let d1 = (self.0[0] - d3 * self.0[0].dot(&d3)).normalize();
        Self([d1, d3.cross(&d1), d3])
    }

    /// Normalized average of two frames, re-orthonormalized.
    pub fn midpoint(&self, other: &Self) -> Self {
        Self([
            (self.0[0] + other.0[0]).normalize(),
            (self.0[1] + other.0[1]).normalize(),
            (self.0[2] + other.0[2]).normalize(),
        ])
        .orthonormalized()
    }

    /// Exact rotation by the rotation vector `phi`.
    pub fn rotated(&self, phi: &Vec3) -> Self {
        let r = Rotation3::new(*phi);
        Self([r * self.0[0], r * self.0[1], r * self.0[2]])
    }

    /// Components of `w` in this frame.
    pub fn components(&self, w: &Vec3) -> [f64; 3] {
        [w.dot(&self.0[0]), w.dot(&self.0[1]), w.dot(&self.0[2])]
    }

    pub fn compose(&self, c: &[f64; 3]) -> Vec3 {
        self.0[0] * c[0] + self.0[1] * c[1] + self.0[2] * c[2]
    }
}

/// Material constants and the curvature wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RodParams {
    /// Bending/twist stiffness `a1, a2, a3`.
    pub bend: [f64; 3],
    /// Shear/stretch stiffness `b1, b2, b3`.
    pub shear: [f64; 3],
    /// Drives `Omega2`; its offset is ignored (the turning process adds `W2`).
    pub wave: TargetCurvature,
    pub length: f64,
}

/// Physical rod parameters before scaling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionalRod {
    pub bend: f64,
    pub shear: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub frequency: f64,
    pub length: f64,
    pub viscosity: f64,
}

impl DimensionalRod {
    /// Lengths scale with `length`, time with `2 pi / frequency`, forces
    /// with `viscosity length^2 / T0`.
    pub fn nondimensionalize(&self) -> Result<RodParams> {
        let t0 = 2.0 * std::f64::consts::PI / self.frequency;
        let force = self.viscosity * self.length * self.length / t0;
        let a = self.bend / (force * self.length * self.length);
        let b = self.shear / force;
        let wave = TargetCurvature::new(
            self.amplitude / self.length,
            self.wavenumber * self.length,
            self.frequency * t0,
            0.0,
        )?;
        Ok(RodParams {
            bend: [a; 3],
            shear: [b; 3],
            wave,
            length: 1.0,
        })
    }
}

/// The piecewise-constant curvature offsets `W1`, `W2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TurningProcess {
    Fixed { w1: f64, w2: f64 },
    /// Uniform draws in `[-amplitude, amplitude]`, redrawn every `interval`
    /// time units. Each interval uses its own ChaCha stream, so the value at
    /// any time is a pure function of `(seed, t)`.
    Random { amplitude: f64, interval: f64, seed: u64 },
}

impl TurningProcess {
    pub fn none() -> Self {
        Self::Fixed { w1: 0.0, w2: 0.0 }
    }

    /// Redraw every 15 beats of the given period.
    pub fn every_fifteen_beats(amplitude: f64, period: f64, seed: u64) -> Self {
        Self::Random {
            amplitude,
            interval: 15.0 * period,
            seed,
        }
    }

    pub fn values(&self, t: f64) -> (f64, f64) {
        match *self {
            Self::Fixed { w1, w2 } => (w1, w2),
            Self::Random {
                amplitude,
                interval,
                seed,
            } => {
                if amplitude == 0.0 {
                    return (0.0, 0.0);
                }
                let epoch = (t / interval).floor().max(0.0) as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(epoch);
                (
                    rng.random_range(-amplitude..=amplitude),
                    rng.random_range(-amplitude..=amplitude),
                )
            }
        }
    }
}

/// Discrete rod: nodes, one frame per node, time.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub nodes: Vec<Vec3>,
    pub frames: Vec<Frame>,
    pub time: f64,
    spacing: f64,
    params: RodParams,
}

impl RodState {
    pub fn new(nodes: Vec<Vec3>, frames: Vec<Frame>, spacing: f64, params: RodParams) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes {
                min: 2,
                got: nodes.len(),
            });
        }
        if frames.len() != nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: nodes.len(),
                got: frames.len(),
            });
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("node spacing must be positive, got {spacing}")));
        }
        Ok(Self {
            nodes,
            frames,
            time: 0.0,
            spacing,
            params,
        })
    }

    /// `n` nodes bent to the wave at `t = 0` in the plane of `D1` and `D3`
    /// (the xy plane), with `D3` tangent and `D2 = e_z`.
    pub fn initial(n: usize, origin: Vec3, params: RodParams) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewNodes { min: 2, got: n });
        }
        let h = params.length / (n - 1) as f64;
        let shape = params.wave.with_offset(0.0);
        let frame_at = |s: f64| {
            let th = shape.tangent_angle(s, 0.0);
            let (sn, cs) = th.sin_cos();
            Frame([Vec3::new(-sn, cs, 0.0), Vec3::z(), Vec3::new(cs, sn, 0.0)])
        };
        const SUB: usize = 64;
        let mut nodes = Vec::with_capacity(n);
        let mut p = origin;
        nodes.push(p);
        for j in 0..n - 1 {
            let ds = h / SUB as f64;
            let mut acc = Vec3::zeros();
            for i in 0..SUB {
                let a = j as f64 * h + i as f64 * ds;
                acc += (frame_at(a).0[2] + frame_at(a + 0.5 * ds).0[2] * 4.0 + frame_at(a + ds).0[2]) * (ds / 6.0);
            }
            p += acc;
            nodes.push(p);
        }
        let frames = (0..n).map(|k| frame_at(k as f64 * h)).collect();
        Self::new(nodes, frames, h, params)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn params(&self) -> &RodParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn centroid(&self) -> Vec3 {
        self.nodes.iter().sum::<Vec3>() / self.nodes.len() as f64
    }

    pub fn max_frame_drift(&self) -> f64 {
        self.frames.iter().map(Frame::drift).fold(0.0, f64::max)
    }

    /// Target curvature components at arc length `s`.
    pub fn target(&self, s: f64, turning: (f64, f64)) -> [f64; 3] {
        [turning.0, self.params.wave.wave(s, self.time) + turning.1, 0.0]
    }
}

/// Internal force and couple at one half point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPoint {
    pub frame: Frame,
    /// `F_i`
    pub force: [f64; 3],
    /// `Q_i`
    pub couple: [f64; 3],
    /// `X'` by centred difference.
    pub tangent: Vec3,
}

impl HalfPoint {
    pub fn force_vector(&self) -> Vec3 {
        self.frame.compose(&self.force)
    }

    pub fn couple_vector(&self) -> Vec3 {
        self.frame.compose(&self.couple)
    }
}

/// Constitutive laws on the `N - 1` half points.
pub fn rod_internal(state: &RodState, turning: (f64, f64)) -> Vec<HalfPoint> {
    let h = state.spacing;
    let p = &state.params;
    (0..state.nodes.len() - 1)
        .map(|k| {
            let (fa, fb) = (&state.frames[k], &state.frames[k + 1]);
            let frame = fa.midpoint(fb);
            let dd = |i: usize| (fb.0[i] - fa.0[i]) / h;
            let kappa = [
                dd(1).dot(frame.d(2)),
                dd(2).dot(frame.d(0)),
                dd(0).dot(frame.d(1)),
            ];
            let omega = state.target((k as f64 + 0.5) * h, turning);
            let tangent = (state.nodes[k + 1] - state.nodes[k]) / h;
            let strain = frame.components(&tangent);
            HalfPoint {
                frame,
                force: [
                    p.shear[0] * strain[0],
                    p.shear[1] * strain[1],
                    p.shear[2] * (strain[2] - 1.0),
                ],
                couple: [
                    p.bend[0] * (kappa[0] - omega[0]),
                    p.bend[1] * (kappa[1] - omega[1]),
                    p.bend[2] * (kappa[2] - omega[2]),
                ],
                tangent,
            }
        })
        .collect()
}

/// Force and torque densities exerted by the fluid on the rod, per node.
#[derive(Debug, Clone, PartialEq)]
pub struct RodLoads {
    pub force: Vec<Vec3>,
    pub torque: Vec<Vec3>,
}

impl RodLoads {
    /// Net force with the trapezoid weights implied by linear densities.
    pub fn net_force(&self, spacing: f64) -> Vec3 {
        trapezoid(&self.force, spacing)
    }

    /// Net torque about the origin, including the moment of the forces.
    pub fn net_torque(&self, nodes: &[Vec3], spacing: f64) -> Vec3 {
        let moment: Vec<Vec3> = nodes
            .iter()
            .zip(&self.force)
            .zip(&self.torque)
            .map(|((x, f), t)| t + x.cross(f))
            .collect();
        trapezoid(&moment, spacing)
    }
}

fn trapezoid(v: &[Vec3], h: f64) -> Vec3 {
    let n = v.len();
    v.iter()
        .enumerate()
        .map(|(k, w)| if k == 0 || k == n - 1 { w * (0.5 * h) } else { w * h })
        .sum()
}

/// `f = -F'`, `tau = -T' - X' x F`, with free ends.
pub fn rod_loads(state: &RodState, turning: (f64, f64)) -> RodLoads {
    let half = rod_internal(state, turning);
    loads_from_internal(&half, state.nodes.len(), state.spacing)
}

fn loads_from_internal(half: &[HalfPoint], n: usize, h: f64) -> RodLoads {
    let forces: Vec<Vec3> = half.iter().map(HalfPoint::force_vector).collect();
    let couples: Vec<Vec3> = half.iter().map(HalfPoint::couple_vector).collect();
    let cross: Vec<Vec3> = half.iter().zip(&forces).map(|(p, f)| p.tangent.cross(f)).collect();
    let at = |v: &[Vec3], j: isize| -> Vec3 {
        if j < 0 || j as usize >= v.len() {
            Vec3::zeros()
        } else {
            v[j as usize]
        }
    };
    let mut force = Vec::with_capacity(n);
    let mut torque = Vec::with_capacity(n);
    for k in 0..n {
        let (lo, hi) = (k as isize - 1, k as isize);
        let end = k == 0 || k == n - 1;
        let width = if end { 0.5 * h } else { h };
        let df = (at(&forces, hi) - at(&forces, lo)) / width;
        let dt = (at(&couples, hi) - at(&couples, lo)) / width;
        let c = if end {
            at(&cross, hi) + at(&cross, lo)
        } else {
            (at(&cross, hi) + at(&cross, lo)) * 0.5
        };
        force.push(-df);
        torque.push(-dt - c);
    }
    RodLoads { force, torque }
}

/// Time-stepping controls for the rod.
#[derive(Debug, Clone, Copy)]
pub struct RodStepConfig {
    pub dt: f64,
    pub eps: RegParam,
    pub mu: FluidParam,
    pub integrator: Integrator,
    pub max_speed: f64,
    pub exec: Execution,
}

/// Linear velocity and angular velocity `curl(u) / 2` at each node.
pub fn rod_velocities(state: &RodState, turning: (f64, f64), cfg: &RodStepConfig) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let loads = rod_loads(state, turning);
    // The rod pushes on the fluid with the opposite loads.
    let g: Vec<Vec3> = loads.force.iter().map(|f| -f).collect();
    let m: Vec<Vec3> = loads.torque.iter().map(|t| -t).collect();
    let segments = state
        .nodes
        .windows(2)
        .map(|w| Segment::new(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let (eps, mu) = (cfg.eps, cfg.mu);
    let pairs = cfg.exec.map(state.nodes.len(), |i| {
        let xhat = &state.nodes[i];
        let mut u = Vec3::zeros();
        let mut curl = Vec3::zeros();
        for (k, seg) in segments.iter().enumerate() {
            let geom = SegmentGeometry::new(xhat, seg, eps);
            let t = rod_table(&geom);
            let st = StokesletIntegrals::from_table(&t);
            let v = seg.v();
            let (ga, gb) = (g[k], g[k + 1] - g[k]);
            let (ma, mb) = (m[k], m[k + 1] - m[k]);
            let scale = seg.length() * mu.prefactor();
            u += (stokeslet_sum(&geom, v, &st, &ga, &gb) + rotlet_sum(&geom, v, &t, &ma, &mb)) * scale;
            curl += (rotlet_sum(&geom, v, &t, &ga, &gb) + dipole_sum(&geom, v, &t, &ma, &mb, DipoleVariant::Kirchhoff))
                * scale;
        }
        (u, curl * 0.5)
    });
    Ok(pairs.into_iter().unzip())
}

fn speed_guard(u: &[Vec3], time: f64, bound: f64) -> Result<()> {
    let mut speed: f64 = 0.0;
    for v in u {
        let s = v.norm();
        if !s.is_finite() {
            return Err(Error::BlowUp { time, speed: s, bound });
        }
        speed = speed.max(s);
    }
    if speed > bound {
        Err(Error::BlowUp { time, speed, bound })
    } else {
        Ok(())
    }
}

fn advance(state: &RodState, u: &[Vec3], w: &[Vec3], dt: f64) -> Result<RodState> {
    let mut next = state.clone();
    for (x, v) in next.nodes.iter_mut().zip(u) {
        *x += v * dt;
    }
    for (node, (f, om)) in next.frames.iter_mut().zip(w).enumerate() {
        let rotated = f.rotated(&(om * dt));
        let drift = rotated.drift();
        if drift > FRAME_DRIFT_LIMIT {
            return Err(Error::FrameDegeneracy { node, drift });
        }
        *f = rotated.orthonormalized();
    }
    next.time += dt;
    Ok(next)
}

/// Advance the rod by one step.
pub fn step_rod(state: &RodState, cfg: &RodStepConfig, turning: &TurningProcess) -> Result<RodState> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {}", cfg.dt)));
    }
    let (u0, w0) = rod_velocities(state, turning.values(state.time), cfg)?;
    speed_guard(&u0, state.time, cfg.max_speed)?;
    match cfg.integrator {
        Integrator::Euler => advance(state, &u0, &w0, cfg.dt),
        Integrator::Rk2 => {
            let mid = advance(state, &u0, &w0, 0.5 * cfg.dt)?;
            let (u1, w1) = rod_velocities(&mid, turning.values(mid.time), cfg)?;
            speed_guard(&u1, mid.time, cfg.max_speed)?;
            advance(state, &u1, &w1, cfg.dt)
        }
    }
}
