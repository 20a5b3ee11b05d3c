//! Swimming runs: the planar flagellum in free space or above a wall, and
//! the Kirchhoff rod.

use segstokes_core::exec::Execution;
use segstokes_core::planar::{
    filament_field, penalty_forces, step_planar, Domain, PlanarFlagellumState, StepConfig, Stiffness,
    TargetCurvature,
};
use segstokes_core::rod::{rod_loads, step_rod, DimensionalRod, RodParams, RodState, RodStepConfig, TurningProcess};
use segstokes_core::{FluidParam, RegParam, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::{Model, SwimPlan, Turning};
use crate::error::{SimError, SimResult};
use crate::output::TrajectoryRecord;

/// Effective radius of a regularized filament relative to `eps`.
pub const RADIUS_RATIO: f64 = 0.97;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallReport {
    /// Largest `|u|` on the `z = 0` grid over all snapshots.
    pub max_velocity: f64,
    /// The same, relative to the largest free-space `|u|` on the grid.
    pub max_relative: f64,
    pub grid_points: usize,
    pub min_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurningInterval {
    pub start: f64,
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RodReport {
    /// `0.97 eps`, in body lengths.
    pub effective_radius: f64,
    /// `1 / r_e`.
    pub length_to_radius: f64,
    /// Largest node distance from the initial beat plane `z = 0`.
    pub max_out_of_plane: f64,
    /// True when every node height stayed exactly zero.
    pub stayed_planar: bool,
    pub max_frame_drift: f64,
    /// Nondimensional `a1`, `b1`, wave amplitude, wavenumber, `Omega0`.
    pub bend: f64,
    pub shear: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub turning_amplitude: f64,
    pub turning: Vec<TurningInterval>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SwimReport {
    pub steps: u64,
    pub final_time: f64,
    pub period: f64,
    pub snapshots: usize,
    pub beats_completed: usize,
    /// Centroid and xy heading (rear-to-front end vector) at each whole beat.
    pub beat_centroids: Vec<[f64; 3]>,
    pub beat_headings: Vec<f64>,
    /// Whole beats `[first, last]` used for the rates below.
    pub measured_beats: Option<[usize; 2]>,
    pub displacement_per_beat: Option<f64>,
    pub speed: Option<f64>,
    pub beats_per_body_length: Option<f64>,
    /// Unwrapped heading change per beat, radians.
    pub turning_rate: Option<f64>,
    /// Every beat-to-beat heading change has the same strict sign.
    pub heading_monotone: Option<bool>,
    pub max_strain: f64,
    pub wall: Option<WallReport>,
    pub rod: Option<RodReport>,
}

/// A failed run with the last state that was still finite.
#[derive(Debug)]
pub struct SwimFailure {
    pub error: SimError,
    pub last_state: Option<TrajectoryRecord>,
}

impl From<SimError> for SwimFailure {
    fn from(error: SimError) -> Self {
        Self {
            error,
            last_state: None,
        }
    }
}

enum Swimmer {
    Planar(PlanarFlagellumState, StepConfig),
    Rod(RodState, RodStepConfig, TurningProcess),
}

impl Swimmer {
    fn nodes(&self) -> &[Vec3] {
        match self {
            Swimmer::Planar(s, _) => &s.nodes,
            Swimmer::Rod(s, ..) => &s.nodes,
        }
    }

    fn time(&self) -> f64 {
        match self {
            Swimmer::Planar(s, _) => s.time,
            Swimmer::Rod(s, ..) => s.time,
        }
    }

    fn spacing(&self) -> f64 {
        match self {
            Swimmer::Planar(s, _) => s.spacing(),
            Swimmer::Rod(s, ..) => s.spacing(),
        }
    }

    fn step(&mut self) -> SimResult<()> {
        match self {
            Swimmer::Planar(s, cfg) => *s = step_planar(s, cfg)?,
            Swimmer::Rod(s, cfg, turning) => *s = step_rod(s, cfg, turning)?,
        }
        Ok(())
    }

    /// Snapshot with the force density exerted on the fluid.
    fn record(&self) -> TrajectoryRecord {
        match self {
            Swimmer::Planar(s, _) => TrajectoryRecord {
                time: s.time,
                nodes: s.nodes.clone(),
                forces: Some(penalty_forces(s)),
                frames: None,
            },
            Swimmer::Rod(s, _, turning) => TrajectoryRecord {
                time: s.time,
                nodes: s.nodes.clone(),
                forces: Some(rod_loads(s, turning.values(s.time)).force.iter().map(|f| -f).collect()),
                frames: Some(s.frames.clone()),
            },
        }
    }

    fn centroid(&self) -> Vec3 {
        let n = self.nodes();
        n.iter().sum::<Vec3>() / n.len() as f64
    }

    fn heading(&self) -> f64 {
        let n = self.nodes();
        let d = n[0] - n[n.len() - 1];
        d.y.atan2(d.x)
    }

    fn strain(&self) -> f64 {
        let h = self.spacing();
        self.nodes()
            .windows(2)
            .map(|w| ((w[1] - w[0]).norm() / h - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn rod_params(plan: &SwimPlan) -> SimResult<(RodParams, TurningProcess, f64)> {
    let r = plan.rod.as_ref().ok_or_else(|| SimError::Config("rod parameters missing".into()))?;
    let params = DimensionalRod {
        bend: r.bend,
        shear: r.shear,
        amplitude: r.amplitude,
        wavenumber: r.wavenumber,
        frequency: r.frequency,
        length: r.length,
        viscosity: r.viscosity,
    }
    .nondimensionalize()?;
    let omega0 = r.turning_amplitude * r.length;
    let turning = match r.turning {
        Turning::None => TurningProcess::none(),
        Turning::Random => TurningProcess::every_fifteen_beats(omega0, params.wave.period(), plan.common.seed),
        Turning::Fixed { w1, w2 } => TurningProcess::Fixed { w1, w2 },
    };
    Ok((params, turning, omega0))
}

fn build(plan: &SwimPlan, exec: Execution) -> SimResult<(Swimmer, f64, f64)> {
    let eps = RegParam::new(plan.eps)?;
    let mu = FluidParam::new(plan.common.viscosity)?;
    match plan.model {
        Model::Planar | Model::Wall => {
            let p = plan.planar.ok_or_else(|| SimError::Config("planar parameters missing".into()))?;
            let wave = TargetCurvature::new(p.amplitude, p.wavenumber, p.frequency, p.offset)?;
            let height = plan.wall.map_or(0.0, |w| w.height);
            let state = PlanarFlagellumState::initial(
                plan.nodes,
                p.length,
                Vec3::new(0.0, 0.0, height),
                Stiffness {
                    tensile: p.tensile,
                    bending: p.bending,
                },
                wave,
            )?;
            let cfg = StepConfig {
                dt: plan.dt,
                eps,
                mu,
                integrator: plan.integrator.into(),
                domain: if plan.model == Model::Wall { Domain::Wall } else { Domain::Free },
                max_speed: plan.max_speed,
                exec,
            };
            Ok((Swimmer::Planar(state, cfg), wave.period(), p.length))
        }
        Model::Rod => {
            let (params, turning, _) = rod_params(plan)?;
            let period = params.wave.period();
            let length = params.length;
            let state = RodState::initial(plan.nodes, Vec3::zeros(), params)?;
            let cfg = RodStepConfig {
                dt: plan.dt,
                eps,
                mu,
                integrator: plan.integrator.into(),
                max_speed: plan.max_speed,
                exec,
            };
            Ok((Swimmer::Rod(state, cfg, turning), period, length))
        }
    }
}

/// Sample the wall-bounded and free-space fields on a square grid on `z = 0`
/// around the filament. Returns `(max |u_wall|, max |u_free|)`.
fn wall_probe(state: &PlanarFlagellumState, cfg: &StepConfig, grid: usize) -> SimResult<(f64, f64)> {
    let (lo, hi) = state.nodes.iter().fold(
        (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
        |(lo, hi), x| (lo.inf(x), hi.sup(x)),
    );
    let pad = 0.5 * state.spacing() * (state.len() - 1) as f64;
    let axis = |a: f64, b: f64, i: usize| (a - pad) + (b - a + 2.0 * pad) * i as f64 / (grid - 1) as f64;
    let points: Vec<Vec3> = (0..grid * grid)
        .map(|k| Vec3::new(axis(lo.x, hi.x, k % grid), axis(lo.y, hi.y, k / grid), 0.0))
        .collect();
    let f = penalty_forces(state);
    let wall = filament_field(&state.nodes, &f, &points, cfg.eps, cfg.mu, Domain::Wall, cfg.exec)?;
    let free = filament_field(&state.nodes, &f, &points, cfg.eps, cfg.mu, Domain::Free, cfg.exec)?;
    let max = |u: &[Vec3]| u.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok((max(&wall), max(&free)))
}

/// Number of steps, snapshot stride and steps per beat.
pub fn schedule(plan: &SwimPlan, period: f64) -> (u64, u64, f64) {
    let steps = (plan.t_final / plan.dt).round().max(1.0) as u64;
    let per_beat = period / plan.dt;
    let stride = (per_beat / plan.snapshots_per_beat as f64).round().max(1.0) as u64;
    (steps, stride, per_beat)
}

/// Run a swimmer, handing each snapshot to `sink`.
pub fn run_swim(
    plan: &SwimPlan,
    mut sink: impl FnMut(&TrajectoryRecord) -> SimResult<()>,
) -> Result<SwimReport, SwimFailure> {
    let exec = plan.common.execution();
    let (mut swimmer, period, length) = build(plan, exec)?;
    let (steps, stride, per_beat) = schedule(plan, period);
    let mut report = SwimReport {
        period,
        ..Default::default()
    };
    let mut wall = plan.wall.map(|w| WallReport {
        max_velocity: 0.0,
        max_relative: 0.0,
        grid_points: w.grid * w.grid,
        min_height: f64::INFINITY,
    });
    let mut rod = match plan.model {
        Model::Rod => {
            let (p, turning, omega0) = rod_params(plan)?;
            let intervals = match turning {
                TurningProcess::Random { interval, .. } => (plan.t_final / interval).ceil().max(1.0) as usize,
                TurningProcess::Fixed { .. } => 1,
            };
            let spacing = match turning {
                TurningProcess::Random { interval, .. } => interval,
                TurningProcess::Fixed { .. } => 0.0,
            };
            Some(RodReport {
                effective_radius: RADIUS_RATIO * plan.eps,
                length_to_radius: p.length / (RADIUS_RATIO * plan.eps),
                max_out_of_plane: 0.0,
                stayed_planar: true,
                max_frame_drift: 0.0,
                bend: p.bend[0],
                shear: p.shear[0],
                amplitude: p.wave.amplitude(),
                wavenumber: p.wave.wavenumber(),
                turning_amplitude: omega0,
                turning: (0..intervals)
                    .map(|k| {
                        let start = k as f64 * spacing;
                        let (w1, w2) = turning.values(start);
                        TurningInterval { start, w1, w2 }
                    })
                    .collect(),
            })
        }
        _ => None,
    };

    let mut next_beat = 1usize;
    let mut observe = |s: &Swimmer, report: &mut SwimReport, snapshot: bool| -> SimResult<()> {
        report.max_strain = report.max_strain.max(s.strain());
        match s {
            Swimmer::Planar(state, cfg) => {
                if let (Some(w), Some(params)) = (wall.as_mut(), plan.wall) {
                    w.min_height = state.nodes.iter().map(|x| x.z).fold(w.min_height, f64::min);
                    if snapshot {
                        let (u_wall, u_free) = wall_probe(state, cfg, params.grid)?;
                        w.max_velocity = w.max_velocity.max(u_wall);
                        if u_free > 0.0 {
                            w.max_relative = w.max_relative.max(u_wall / u_free);
                        }
                    }
                }
            }
            Swimmer::Rod(state, ..) => {
                if let Some(r) = rod.as_mut() {
                    for x in &state.nodes {
                        r.max_out_of_plane = r.max_out_of_plane.max(x.z.abs());
                        r.stayed_planar &= x.z == 0.0;
                    }
                    r.max_frame_drift = r.max_frame_drift.max(state.max_frame_drift());
                }
            }
        }
        Ok(())
    };

    let fail = |error: SimError, s: &Swimmer| SwimFailure {
        error,
        last_state: Some(s.record()),
    };
    let beat = |s: &Swimmer, report: &mut SwimReport| {
        let c = s.centroid();
        report.beat_centroids.push([c.x, c.y, c.z]);
        report.beat_headings.push(s.heading());
    };

    beat(&swimmer, &mut report);
    observe(&swimmer, &mut report, true).map_err(|e| fail(e, &swimmer))?;
    sink(&swimmer.record())?;
    report.snapshots = 1;
    for step in 1..=steps {
        swimmer.step().map_err(|e| fail(e, &swimmer))?;
        let snapshot = step % stride == 0 || step == steps;
        let at_beat = step == (next_beat as f64 * per_beat).round() as u64;
        observe(&swimmer, &mut report, snapshot).map_err(|e| fail(e, &swimmer))?;
        if at_beat {
            beat(&swimmer, &mut report);
            log::info!("beat {next_beat} at t = {:.6}", swimmer.time());
            next_beat += 1;
        }
        if snapshot {
            sink(&swimmer.record())?;
            report.snapshots += 1;
        }
    }
    report.steps = steps;
    report.final_time = swimmer.time();
    report.beats_completed = report.beat_centroids.len() - 1;
    report.wall = wall;
    report.rod = rod;
    rates(&mut report, length);
    Ok(report)
}

/// Displacement and heading rates over beats `[2, last]`, or `[0, last]`
/// for runs shorter than three beats.
fn rates(report: &mut SwimReport, length: f64) {
    let last = report.beats_completed;
    if last == 0 {
        return;
    }
    let first = if last >= 3 { 2 } else { 0 };
    let n = (last - first) as f64;
    let [a, b] = [report.beat_centroids[first], report.beat_centroids[last]];
    let disp = Vec3::from(b) - Vec3::from(a);
    let per_beat = disp.norm() / n;
    report.measured_beats = Some([first, last]);
    report.displacement_per_beat = Some(per_beat);
    report.speed = Some(per_beat / report.period);
    report.beats_per_body_length = Some(length / per_beat);
    let steps: Vec<f64> = report.beat_headings[first..=last]
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d - (2.0 * std::f64::consts::PI) * (d / (2.0 * std::f64::consts::PI)).round()
        })
        .collect();
    report.turning_rate = Some(steps.iter().sum::<f64>() / n);
    report.heading_monotone = Some(steps.iter().all(|d| *d > 0.0) || steps.iter().all(|d| *d < 0.0));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Experiment, ExperimentConfig, Plan};

    fn plan(experiment: Experiment, json: &str) -> SwimPlan {
        match ExperimentConfig::from_json(json).unwrap().plan(experiment).unwrap() {
            Plan::Swim(p) => p,
            _ => panic!(),
        }
    }

    #[test]
    fn schedule_defaults_to_a_hundred_snapshots_per_beat() {
        let p = plan(Experiment::SwimPlanar, "{}");
        let (steps, stride, per_beat) = schedule(&p, 1.0);
        assert_eq!((steps, stride), (280_000_000, 40_000));
        assert!((per_beat - 4e6).abs() < 1e-6);
    }

    #[test]
    fn short_run_reports_rates_and_snapshots() {
        let p = plan(Experiment::SwimPlanar, r#"{"nodes": 8, "eps": 0.01, "dt": 1e-3, "t_final": 2.0, "snapshots_per_beat": 4}"#);
        let mut times = Vec::new();
        let rep = run_swim(&p, |r| {
            times.push(r.time);
            Ok(())
        })
        .unwrap();
        assert_eq!(rep.steps, 2000);
        assert_eq!(rep.snapshots, 9);
        assert_eq!(times.len(), 9);
        assert_eq!(rep.beats_completed, 2);
        assert_eq!(rep.measured_beats, Some([0, 2]));
        assert!(rep.speed.unwrap() > 0.0);
        assert!(rep.max_strain > 0.0);
    }

    #[test]
    fn blow_up_keeps_the_last_state() {
        let p = plan(Experiment::SwimPlanar, r#"{"nodes": 8, "eps": 0.01, "dt": 1e-3, "t_final": 1.0, "max_speed": 1e-9}"#);
        let err = run_swim(&p, |_| Ok(())).unwrap_err();
        assert_eq!(err.error.exit_code(), 3);
        assert_eq!(err.last_state.unwrap().time, 0.0);
    }

    #[test]
    fn rod_report_carries_the_effective_radius() {
        let p = plan(Experiment::SwimRod, r#"{"nodes": 6, "dt": 1e-4, "t_final": 0.01, "rod": {"turning": "none"}}"#);
        let rep = run_swim(&p, |_| Ok(())).unwrap();
        let rod = rep.rod.unwrap();
        assert!((rod.effective_radius - 0.00485).abs() < 1e-15);
        assert_eq!(rod.length_to_radius.round(), 206.0);
        assert!(rod.stayed_planar);
        assert!((rod.turning_amplitude - 1.7487).abs() < 1e-3);
    }
}
