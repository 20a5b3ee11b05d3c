//! Planar elastic flagellum driven by a preferred curvature wave.
//!
//! Energy of the discrete filament with spacing `h`:
//!
//! ```text
//! E = 1/2 sum_links kT (|D+ x_j| - 1)^2 h
//!   + 1/2 sum_interior kB (D2 y_j D0 x_j - D2 x_j D0 y_j - Omega(s_j, t))^2 h
//! ```
//!
//! Forces `F_k = -dE/dx_k` become densities `F_k / h`, doubled at the two
//! ends, and drive the filament through the segment kernels.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernels::{FluidParam, RegParam, Vec3};
use crate::segment::stokeslet_velocity;
use crate::wall::{image_velocity, WallContext};
use crate::integrals::Segment;

/// Preferred curvature
/// `Omega(s, t) = A k^2 sin(k s - sigma t) / sqrt(1 - A^2 k^2 cos^2(k s - sigma t)) + Omega0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCurvature {
    amplitude: f64,
    wavenumber: f64,
    frequency: f64,
    offset: f64,
}

impl TargetCurvature {
    pub fn new(amplitude: f64, wavenumber: f64, frequency: f64, offset: f64) -> Result<Self> {
        let ak = amplitude * wavenumber;
        if !(ak * ak < 1.0) {
            return Err(Error::CurvatureDomain(ak * ak));
        }
        if ![amplitude, wavenumber, frequency, offset].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("curvature parameters must be finite".into()));
        }
        Ok(Self {
            amplitude,
            wavenumber,
            frequency,
            offset,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Beat period `2 pi / sigma`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.frequency
    }

    /// The same wave with a different constant offset.
    pub fn with_offset(self, offset: f64) -> Self {
        Self { offset, ..self }
    }

    /// The sinusoidal part alone, without the offset.
    pub fn wave(&self, s: f64, t: f64) -> f64 {
        let ak = self.amplitude * self.wavenumber;
        let phase = self.wavenumber * s - self.frequency * t;
        let c = phase.cos();
        ak * self.wavenumber * phase.sin() / (1.0 - ak * ak * c * c).sqrt()
    }

    pub fn at(&self, s: f64, t: f64) -> f64 {
        self.wave(s, t) + self.offset
    }

    /// Tangent angle `int_0^s Omega(s', t) ds'` with zero angle at `s = 0`.
    pub fn tangent_angle(&self, s: f64, t: f64) -> f64 {
        let ak = self.amplitude * self.wavenumber;
        let phase = self.wavenumber * s - self.frequency * t;
        (ak * (self.frequency * t).cos()).asin() - (ak * phase.cos()).asin() + self.offset * s
    }
}

/// `Omega(s, t)` for the given wave.
pub fn target_curvature(s: f64, t: f64, params: &TargetCurvature) -> f64 {
    params.at(s, t)
}

/// Tensile and bending stiffness.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stiffness {
    pub tensile: f64,
    pub bending: f64,
}

/// Discrete planar flagellum.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarFlagellumState {
    pub nodes: Vec<Vec3>,
    pub time: f64,
    spacing: f64,
    stiffness: Stiffness,
    curvature: TargetCurvature,
}

impl PlanarFlagellumState {
    pub fn new(nodes: Vec<Vec3>, spacing: f64, stiffness: Stiffness, curvature: TargetCurvature) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::TooFewNodes {
                min: 3,
                got: nodes.len(),
            });
        }
        if !(spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("node spacing must be positive, got {spacing}")));
        }
        Ok(Self {
            nodes,
            time: 0.0,
            spacing,
            stiffness,
            curvature,
        })
    }

    /// `m` nodes on a filament of the given length whose curvature is the
    /// wave at `t = 0` with zero offset, starting at `origin` and lying in the
    /// plane `z = origin.z`.
    pub fn initial(
        m: usize,
        length: f64,
        origin: Vec3,
        stiffness: Stiffness,
        curvature: TargetCurvature,
    ) -> Result<Self> {
        if m < 3 {
            return Err(Error::TooFewNodes { min: 3, got: m });
        }
        let h = length / (m - 1) as f64;
        let shape = curvature.with_offset(0.0);
        // Simpson's rule on each link, fine enough to be exact to round-off.
        const SUB: usize = 64;
        let dir = |s: f64| {
            let th = shape.tangent_angle(s, 0.0);
            Vec3::new(th.cos(), th.sin(), 0.0)
        };
        let mut nodes = Vec::with_capacity(m);
        let mut p = origin;
        nodes.push(p);
        for j in 0..m - 1 {
            let s0 = j as f64 * h;
            let ds = h / SUB as f64;
            let mut acc = Vec3::zeros();
            for i in 0..SUB {
                let a = s0 + i as f64 * ds;
                acc += (dir(a) + dir(a + 0.5 * ds) * 4.0 + dir(a + ds)) * (ds / 6.0);
            }
            p += acc;
            nodes.push(p);
        }
        Self::new(nodes, h, stiffness, curvature)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn stiffness(&self) -> Stiffness {
        self.stiffness
    }

    pub fn curvature(&self) -> &TargetCurvature {
        &self.curvature
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

    /// Angle in the xy plane of the vector from the last node to the first.
    pub fn heading(&self) -> f64 {
        let d = self.nodes[0] - self.nodes[self.nodes.len() - 1];
        d.y.atan2(d.x)
    }

    /// Largest `| |D+ x_j| - 1 |` over the links.
    pub fn max_strain(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| ((w[1] - w[0]).norm() / self.spacing - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Discrete signed curvature `D2 y D0 x - D2 x D0 y` at interior node `j`.
    pub fn discrete_curvature(&self, j: usize) -> f64 {
        let (a, b) = self.stencil(j);
        a.y * b.x - a.x * b.y
    }

    fn stencil(&self, j: usize) -> (Vec3, Vec3) {
        let h = self.spacing;
        let (xm, x, xp) = (self.nodes[j - 1], self.nodes[j], self.nodes[j + 1]);
        ((xp - x * 2.0 + xm) / (h * h), (xp - xm) / (2.0 * h))
    }
}

/// Elastic energy of the current configuration.
pub fn elastic_energy(state: &PlanarFlagellumState) -> f64 {
    let h = state.spacing;
    let Stiffness { tensile, bending } = state.stiffness;
    let stretch: f64 = state
        .nodes
        .windows(2)
        .map(|w| ((w[1] - w[0]).norm() / h - 1.0).powi(2))
        .sum();
    let bend: f64 = (1..state.nodes.len() - 1)
        .map(|j| (state.discrete_curvature(j) - state.curvature.at(j as f64 * h, state.time)).powi(2))
        .sum();
    0.5 * h * (tensile * stretch + bending * bend)
}

/// Nodal forces `F_k = -dE/dx_k`.
pub fn penalty_loads(state: &PlanarFlagellumState) -> Vec<Vec3> {
    let h = state.spacing;
    let Stiffness { tensile, bending } = state.stiffness;
    let m = state.nodes.len();
    let mut grad = vec![Vec3::zeros(); m];
    for j in 0..m - 1 {
        let d = state.nodes[j + 1] - state.nodes[j];
        let len = d.norm();
        let g = d * (tensile * (len / h - 1.0) / len);
        grad[j + 1] += g;
        grad[j] -= g;
    }
    for j in 1..m - 1 {
        let (a, b) = state.stencil(j);
        let c = a.y * b.x - a.x * b.y;
        let g = bending * (c - state.curvature.at(j as f64 * h, state.time)) * h;
        let dc_da = Vec3::new(-b.y, b.x, 0.0) * (g / (h * h));
        let dc_db = Vec3::new(a.y, -a.x, 0.0) * (g / (2.0 * h));
        grad[j + 1] += dc_da + dc_db;
        grad[j] -= dc_da * 2.0;
        grad[j - 1] += dc_da - dc_db;
    }
    grad.iter().map(|g| -g).collect()
}

/// Force densities: `F_k / h`, with `2 F / h` at both ends.
pub fn penalty_forces(state: &PlanarFlagellumState) -> Vec<Vec3> {
    let h = state.spacing;
    let m = state.nodes.len();
    penalty_loads(state)
        .into_iter()
        .enumerate()
        .map(|(k, f)| if k == 0 || k == m - 1 { f * (2.0 / h) } else { f / h })
        .collect()
}

/// Free space or a no-slip plane wall at `z = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Free,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Integrator {
    Euler,
    /// Explicit midpoint.
    Rk2,
}

/// Everything a time step needs besides the state.
#[derive(Debug, Clone, Copy)]
pub struct StepConfig {
    pub dt: f64,
    pub eps: RegParam,
    pub mu: FluidParam,
    pub integrator: Integrator,
    pub domain: Domain,
    /// Abort if any node moves faster than this.
    pub max_speed: f64,
    pub exec: Execution,
}

/// Velocity at `points` from linear force densities `forces` on the
/// polyline `nodes`.
pub fn filament_field(
    nodes: &[Vec3],
    forces: &[Vec3],
    points: &[Vec3],
    eps: RegParam,
    mu: FluidParam,
    domain: Domain,
    exec: Execution,
) -> Result<Vec<Vec3>> {
    let segments = nodes
        .windows(2)
        .map(|w| Segment::new(w[0], w[1]))
        .collect::<Result<Vec<_>>>()?;
    let walls = match domain {
        Domain::Free => Vec::new(),
        Domain::Wall => segments.iter().map(WallContext::new).collect::<Result<Vec<_>>>()?,
    };
    Ok(exec.map(points.len(), |i| {
        let xhat = &points[i];
        let mut u = Vec3::zeros();
        for (k, seg) in segments.iter().enumerate() {
            let b = forces[k + 1] - forces[k];
            u += stokeslet_velocity(xhat, seg, &forces[k], &b, eps, mu);
            if let Some(wall) = walls.get(k) {
                u += image_velocity(xhat, seg, wall, &forces[k], &b, eps, mu);
            }
        }
        u
    }))
}

/// Node velocities of the flagellum at its current time.
pub fn planar_velocities(state: &PlanarFlagellumState, cfg: &StepConfig) -> Result<Vec<Vec3>> {
    let forces = penalty_forces(state);
    filament_field(&state.nodes, &forces, &state.nodes, cfg.eps, cfg.mu, cfg.domain, cfg.exec)
}

fn guard(u: &[Vec3], time: f64, bound: f64) -> Result<()> {
    let speed = u.iter().map(|v| v.norm()).fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) });
    if speed.is_finite() && speed <= bound {
        Ok(())
    } else {
        Err(Error::BlowUp { time, speed, bound })
    }
}

/// Advance the flagellum by one step.
pub fn step_planar(state: &PlanarFlagellumState, cfg: &StepConfig) -> Result<PlanarFlagellumState> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("time step must be positive, got {}", cfg.dt)));
    }
    let u0 = planar_velocities(state, cfg)?;
    guard(&u0, state.time, cfg.max_speed)?;
    let mut next = state.clone();
    match cfg.integrator {
        Integrator::Euler => {
            for (x, u) in next.nodes.iter_mut().zip(&u0) {
                *x += u * cfg.dt;
            }
        }
        Integrator::Rk2 => {
            let mut mid = state.clone();
            for (x, u) in mid.nodes.iter_mut().zip(&u0) {
                *x += u * (0.5 * cfg.dt);
            }
            mid.time += 0.5 * cfg.dt;
            let u1 = planar_velocities(&mid, cfg)?;
            guard(&u1, mid.time, cfg.max_speed)?;
            for (x, u) in next.nodes.iter_mut().zip(&u1) {
                *x += u * cfg.dt;
            }
        }
    }
    next.time += cfg.dt;
    Ok(next)
}
