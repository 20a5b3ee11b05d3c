//! Nodal force densities to velocities on a piecewise-linear filament.
//!
//! With nodes `y_1..y_N` and densities `f_k` interpolated linearly along each
//! segment, the velocity at `xhat` is `8 pi mu u = sum_k M1_k f_k + M2_k f_{k+1}`,
//! where for segment `k` (`x0 = xhat - y_k`, `v = y_k - y_{k+1}`)
//!
//! ```text
//! P  = A0 I + T03 x0 x0^T + T13 (x0 v^T + v x0^T) + T23 v v^T
//! Q  = A1 I + T13 x0 x0^T + T23 (x0 v^T + v x0^T) + T33 v v^T
//! M2 = L Q,   M1 = L P - M2
//! ```
//!
//! with `A0 = T0,-1 + eps^2 T0,-3`, `A1 = T1,-1 + eps^2 T1,-3`.
//!
//! The point-force baseline uses the same nodal densities with trapezoid
//! weights, `F_j = w_j f_j`, so both methods share one drag formula.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::integrals::{stokeslet_integrals, Segment, SegmentGeometry};
use crate::kernels::{point_stokeslet, FluidParam, RegParam, Vec3};
use crate::segment::{expansion, stokeslet_velocity, Expansion};

/// Condition estimates above this are logged.
pub const CONDITION_WARN: f64 = 1e10;
/// Relative residual a solve must reach.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// How forces are carried by the filament.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Regularized Stokeslet segments with linear densities.
    Segments,
    /// Regularized point forces at the nodes.
    Mrs,
}

/// An open polyline of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FilamentMesh {
    nodes: Vec<Vec3>,
    segments: Vec<Segment>,
}

impl FilamentMesh {
    pub fn new(nodes: Vec<Vec3>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::TooFewNodes {
                min: 2,
                got: nodes.len(),
            });
        }
        let segments = nodes
            .windows(2)
            .map(|w| Segment::new(w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes, segments })
    }

    /// Equally spaced nodes on `[0, length]` along the x axis.
    pub fn straight(n_nodes: usize, length: f64) -> Result<Self> {
        if n_nodes < 2 {
            return Err(Error::TooFewNodes { min: 2, got: n_nodes });
        }
        let h = length / (n_nodes - 1) as f64;
        Self::new((0..n_nodes).map(|k| Vec3::new(k as f64 * h, 0.0, 0.0)).collect())
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn total_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).sum()
    }

    /// Mean node spacing.
    pub fn spacing(&self) -> f64 {
        self.total_length() / self.segments.len() as f64
    }

    /// Trapezoid weights `(L_{j-1} + L_j) / 2`.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for (k, s) in self.segments.iter().enumerate() {
            w[k] += 0.5 * s.length();
            w[k + 1] += 0.5 * s.length();
        }
        w
    }

    /// Default size of the dense check set: 32 points per segment plus the
    /// final node.
    pub fn default_check_count(&self) -> usize {
        32 * self.segments.len() + 1
    }

    /// `n` points equally spaced in arc length from the first node to the
    /// last, paired with their arc-length coordinate.
    pub fn check_points(&self, n: usize) -> Vec<(f64, Vec3)> {
        let total = self.total_length();
        let mut out = Vec::with_capacity(n);
        let mut k = 0;
        let mut start = 0.0;
        for i in 0..n {
            let s = if n == 1 { 0.0 } else { total * i as f64 / (n - 1) as f64 };
            while k + 1 < self.segments.len() && s > start + self.segments[k].length() {
                start += self.segments[k].length();
                k += 1;
            }
            let alpha = ((s - start) / self.segments[k].length()).clamp(0.0, 1.0);
            out.push((s, self.segments[k].point(alpha)));
        }
        out
    }
}

/// The pair `(M1, M2)` for one segment seen from `xhat`, so that the
/// segment's contribution is `8 pi mu u = M1 f_k + M2 f_{k+1}`.
pub fn segment_blocks(xhat: &Vec3, seg: &Segment, eps: RegParam) -> (Matrix3<f64>, Matrix3<f64>) {
    match expansion(xhat, seg, eps) {
        Expansion::Forward => direct_blocks(xhat, seg, eps),
        Expansion::Reversed => {
            let (r1, r2) = direct_blocks(xhat, &seg.reversed(), eps);
            (r2, r1)
        }
        Expansion::Split { alpha, ahead, behind } => {
            // both pieces start at the foot, where the density is (1 - alpha) f_k + alpha f_{k+1}
            let (a1, a2) = direct_blocks(xhat, &ahead, eps);
            let (b1, b2) = direct_blocks(xhat, &behind, eps);
            let foot = a1 + b1;
            (foot * (1.0 - alpha) + b2, foot * alpha + a2)
        }
    }
}

fn direct_blocks(xhat: &Vec3, seg: &Segment, eps: RegParam) -> (Matrix3<f64>, Matrix3<f64>) {
    let geom = SegmentGeometry::new(xhat, seg, eps);
    let t = stokeslet_integrals(&geom);
    let e2 = geom.eps2;
    let x0 = geom.x0;
    let v = *seg.v();
    let xx = x0 * x0.transpose();
    let sym = x0 * v.transpose() + v * x0.transpose();
    let vv = v * v.transpose();
    let id = Matrix3::identity();
    let p = id * (t.t0m1 + e2 * t.t0m3) + xx * t.t0m3 + sym * t.t1m3 + vv * t.t2m3;
    let q = id * (t.t1m1 + e2 * t.t1m3) + xx * t.t1m3 + sym * t.t2m3 + vv * t.t3m3;
    let l = seg.length();
    let m2 = q * l;
    (p * l - m2, m2)
}

/// `8 pi mu S(xhat, y)` as a matrix.
fn point_block(xhat: &Vec3, y: &Vec3, eps: RegParam) -> Matrix3<f64> {
    let x = xhat - y;
    let e2 = eps.squared();
    let r2 = x.norm_squared() + e2;
    let r = r2.sqrt();
    let r3 = r2 * r;
    Matrix3::identity() * (1.0 / r + e2 / r3) + x * x.transpose() / r3
}

/// Dense map from nodal densities to velocities at a set of points.
#[derive(Debug, Clone)]
pub struct MobilityMatrix {
    /// `8 pi mu u = matrix * f`, blocks ordered point-major and node-major.
    matrix: DMatrix<f64>,
    mu: FluidParam,
}

impl MobilityMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn n_eval(&self) -> usize {
        self.matrix.nrows() / 3
    }

    pub fn n_nodes(&self) -> usize {
        self.matrix.ncols() / 3
    }

    /// Velocities at the evaluation points for the given nodal densities.
    pub fn apply(&self, forces: &[Vec3]) -> Result<Vec<Vec3>> {
        if forces.len() != self.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes(),
                got: forces.len(),
            });
        }
        let u = &self.matrix * flatten(forces) * self.mu.prefactor();
        Ok(unflatten(&u))
    }

    /// One-norm condition number `|A|_1 |A^-1|_1`; infinite if singular.
    pub fn condition_estimate(&self) -> Result<f64> {
        if !self.matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.ncols(),
                got: self.matrix.nrows(),
            });
        }
        Ok(condition_one(&self.matrix))
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn condition_one(m: &DMatrix<f64>) -> f64 {
    match m.clone().lu().try_inverse() {
        Some(inv) => one_norm(m) * one_norm(&inv),
        None => f64::INFINITY,
    }
}

fn flatten(v: &[Vec3]) -> DVector<f64> {
    DVector::from_iterator(3 * v.len(), v.iter().flat_map(|p| [p.x, p.y, p.z]))
}

fn unflatten(v: &DVector<f64>) -> Vec<Vec3> {
    v.as_slice().chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}

/// Assemble the mobility matrix of `mesh` at `eval_points`.
pub fn assemble(
    mesh: &FilamentMesh,
    eval_points: &[Vec3],
    eps: RegParam,
    mu: FluidParam,
    method: Method,
    exec: Execution,
) -> MobilityMatrix {
    let n = mesh.n_nodes();
    let weights = mesh.weights();
    let rows: Vec<Vec<Matrix3<f64>>> = exec.map(eval_points.len(), |i| {
        let xhat = &eval_points[i];
        match method {
            Method::Segments => {
                let mut row = vec![Matrix3::zeros(); n];
                for (k, seg) in mesh.segments().iter().enumerate() {
                    let (m1, m2) = segment_blocks(xhat, seg, eps);
                    row[k] += m1;
                    row[k + 1] += m2;
                }
                row
            }
            Method::Mrs => mesh
                .nodes()
                .iter()
                .zip(&weights)
                .map(|(y, w)| point_block(xhat, y, eps) * *w)
                .collect(),
        }
    });
    let mut matrix = DMatrix::zeros(3 * eval_points.len(), 3 * n);
    for (i, row) in rows.iter().enumerate() {
        for (k, block) in row.iter().enumerate() {
            matrix.fixed_view_mut::<3, 3>(3 * i, 3 * k).copy_from(block);
        }
    }
    MobilityMatrix { matrix, mu }
}

/// Nodal densities reproducing a prescribed velocity at the nodes.
#[derive(Debug, Clone)]
pub struct ForceSolution {
    pub forces: Vec<Vec3>,
    /// One-norm condition estimate of the collocation matrix.
    pub condition: f64,
    /// `|M f - 8 pi mu u| / |8 pi mu u|`.
    pub residual: f64,
}

/// Solve for nodal force densities so that the filament moves with
/// `prescribed[k]` at node `k`.
pub fn solve_forces(
    mesh: &FilamentMesh,
    prescribed: &[Vec3],
    eps: RegParam,
    mu: FluidParam,
    method: Method,
    exec: Execution,
) -> Result<ForceSolution> {
    if prescribed.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: prescribed.len(),
        });
    }
    let m = assemble(mesh, mesh.nodes(), eps, mu, method, exec);
    let rhs = flatten(prescribed) * (1.0 / mu.prefactor());
    let rhs_norm = rhs.norm();
    if rhs_norm == 0.0 {
        return Ok(ForceSolution {
            forces: vec![Vec3::zeros(); mesh.n_nodes()],
            condition: m.condition_estimate()?,
            residual: 0.0,
        });
    }
    let condition = m.condition_estimate()?;
    if !condition.is_finite() || condition * f64::EPSILON > 1.0 {
        return Err(Error::IllConditioned { condition });
    }
    if condition > CONDITION_WARN {
        log::warn!("mobility matrix condition estimate {condition:.3e} exceeds {CONDITION_WARN:.0e}");
    }
    let sol = m
        .matrix
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::IllConditioned { condition })?;
    let residual = (&m.matrix * &sol - &rhs).norm() / rhs_norm;
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::IllConditioned { condition });
    }
    Ok(ForceSolution {
        forces: unflatten(&sol),
        condition,
        residual,
    })
}

/// Velocities at `eval_points` from regularized point forces `(location, force)`.
pub fn mrs_baseline_velocity(
    sources: &[(Vec3, Vec3)],
    eval_points: &[Vec3],
    eps: RegParam,
    mu: FluidParam,
    exec: Execution,
) -> Vec<Vec3> {
    exec.map(eval_points.len(), |i| {
        sources
            .iter()
            .fold(Vec3::zeros(), |acc, (y, f)| acc + point_stokeslet(&eval_points[i], y, f, eps, mu))
    })
}

/// Velocities at arbitrary points for nodal densities on `mesh`, by direct
/// summation over segments (or weighted point forces).
pub fn filament_velocity(
    mesh: &FilamentMesh,
    forces: &[Vec3],
    eval_points: &[Vec3],
    eps: RegParam,
    mu: FluidParam,
    method: Method,
    exec: Execution,
) -> Result<Vec<Vec3>> {
    if forces.len() != mesh.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: mesh.n_nodes(),
            got: forces.len(),
        });
    }
    Ok(match method {
        Method::Segments => exec.map(eval_points.len(), |i| {
            mesh.segments()
                .iter()
                .enumerate()
                .fold(Vec3::zeros(), |acc, (k, seg)| {
                    let b = forces[k + 1] - forces[k];
                    acc + stokeslet_velocity(&eval_points[i], seg, &forces[k], &b, eps, mu)
                })
        }),
        Method::Mrs => {
            let sources: Vec<(Vec3, Vec3)> = mesh
                .nodes()
                .iter()
                .zip(mesh.weights())
                .zip(forces)
                .map(|((y, w), f)| (*y, f * w))
                .collect();
            mrs_baseline_velocity(&sources, eval_points, eps, mu, exec)
        }
    })
}

/// `(arc length, |u - U|)` along a dense check set of `n_check` points.
#[allow(clippy::too_many_arguments)]
pub fn velocity_errors(
    mesh: &FilamentMesh,
    forces: &[Vec3],
    prescribed: &Vec3,
    eps: RegParam,
    mu: FluidParam,
    n_check: usize,
    method: Method,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    let check = mesh.check_points(n_check);
    let points: Vec<Vec3> = check.iter().map(|(_, p)| *p).collect();
    let u = filament_velocity(mesh, forces, &points, eps, mu, method, exec)?;
    Ok(check
        .iter()
        .zip(u)
        .map(|((s, _), u)| (*s, (u - prescribed).norm()))
        .collect())
}

/// RMS boundary-velocity error over `n_check` points.
#[allow(clippy::too_many_arguments)]
pub fn leak(
    mesh: &FilamentMesh,
    forces: &[Vec3],
    prescribed: &Vec3,
    eps: RegParam,
    mu: FluidParam,
    n_check: usize,
    method: Method,
    exec: Execution,
) -> Result<f64> {
    let errors = velocity_errors(mesh, forces, prescribed, eps, mu, n_check, method, exec)?;
    let sum: f64 = errors.iter().map(|(_, e)| e * e).sum();
    Ok((sum / errors.len() as f64).sqrt())
}

/// Net force `sum_k (L_k / 2)(f_k + f_{k+1})` exerted on the fluid.
pub fn drag(mesh: &FilamentMesh, forces: &[Vec3]) -> Vec3 {
    mesh.segments()
        .iter()
        .enumerate()
        .fold(Vec3::zeros(), |acc, (k, s)| acc + (forces[k] + forces[k + 1]) * (0.5 * s.length()))
}

/// Transverse drag on a slender cylinder of unit length, unit speed and
/// unit viscosity with radius `r_e`: `8 pi / (1 - 2 ln r_e)`.
pub fn slender_drag(r_e: f64) -> f64 {
    8.0 * std::f64::consts::PI / (1.0 - 2.0 * r_e.ln())
}

/// Least-squares `c` in `r_e = c eps` for measured transverse drags.
pub fn fit_effective_radius(eps: &[f64], drags: &[f64]) -> Result<f64> {
    if eps.len() != drags.len() || eps.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: eps.len(),
            got: drags.len(),
        });
    }
    let cost = |c: f64| -> f64 {
        eps.iter()
            .zip(drags)
            .map(|(e, d)| (d - slender_drag(c * e)).powi(2))
            .sum()
    };
    // The cost is unimodal in c on any bracket where c * eps < 1.
    let (mut a, mut b) = (1e-3, 1.0 / eps.iter().cloned().fold(0.0, f64::max) * 0.999);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (cost(c), cost(d));
    while (b - a) > 1e-12 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = cost(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = cost(d);
        }
    }
    Ok(0.5 * (a + b))
}
