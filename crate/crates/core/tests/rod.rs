use std::f64::consts::PI;

use nalgebra::Rotation3;
use segstokes_core::exec::Execution;
use segstokes_core::planar::{Integrator, TargetCurvature};
use segstokes_core::rod::{
    rod_internal, rod_loads, rod_velocities, step_rod, DimensionalRod, Frame, RodParams, RodState, RodStepConfig,
    TurningProcess,
};
use segstokes_core::segment::{dipole_velocity, rotlet_velocity, stokeslet_velocity};
use segstokes_core::{DipoleVariant, FluidParam, RegParam, Segment, Vec3};

fn table_params() -> RodParams {
    DimensionalRod {
        bend: 4.9587,
        shear: 0.8264,
        amplitude: 3.5,
        wavenumber: 9.0 * PI / 160.0,
        frequency: 550.0,
        length: 40.0,
        viscosity: 1e-6,
    }
    .nondimensionalize()
    .unwrap()
}

fn config(exec: Execution) -> RodStepConfig {
    RodStepConfig {
        dt: 5e-6,
        eps: RegParam::new(0.005).unwrap(),
        mu: FluidParam::new(1.0).unwrap(),
        integrator: Integrator::Euler,
        max_speed: 1e3,
        exec,
    }
}

/// A smooth twisted, sheared, stretched rod sampled at `n` nodes.
fn smooth_rod(n: usize) -> RodState {
    let params = table_params();
    let h = params.length / (n - 1) as f64;
    let centre = |s: f64| Vec3::new(0.3 * (2.0 * s).sin(), 0.2 * (3.0 * s).cos(), 1.1 * s);
    let frame = |s: f64| {
        let phi = Vec3::new(0.4 * (1.5 * s).sin(), 0.7 * s * s, 1.3 * s);
        let r = Rotation3::new(phi);
        Frame([r * Vec3::x(), r * Vec3::y(), r * Vec3::z()])
    };
    let nodes = (0..n).map(|k| centre(k as f64 * h)).collect();
    let frames = (0..n).map(|k| frame(k as f64 * h)).collect();
    let mut s = RodState::new(nodes, frames, h, params).unwrap();
    s.time = 0.17;
    s
}

fn max_gap(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn half_point_quantities_converge_at_second_order() {
    // refining by 3 keeps the coarse half points: (k + 1/2) h = (3k + 1 + 1/2) h / 3
    let turning = (0.4, -0.2);
    let sizes = [11, 31, 91];
    let sampled: Vec<(Vec<Vec3>, Vec<Vec3>)> = sizes
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let stride = 3usize.pow(level as u32);
            let offset = (stride - 1) / 2;
            let half = rod_internal(&smooth_rod(n), turning);
            let picked: Vec<_> = (0..10).map(|k| half[stride * k + offset]).collect();
            (
                picked.iter().map(|p| p.force_vector()).collect(),
                picked.iter().map(|p| p.couple_vector()).collect(),
            )
        })
        .collect();
    for pick in [|p: &(Vec<Vec3>, Vec<Vec3>)| p.0.clone(), |p: &(Vec<Vec3>, Vec<Vec3>)| p.1.clone()] {
        let (a, b, c) = (pick(&sampled[0]), pick(&sampled[1]), pick(&sampled[2]));
        let ratio = max_gap(&a, &b) / max_gap(&b, &c);
        assert!((ratio - 9.0).abs() < 1.0, "ratio {ratio}");
    }
}

#[test]
fn interior_loads_converge_at_second_order() {
    let turning = (0.4, -0.2);
    let sizes = [11, 21, 41];
    let sampled: Vec<(Vec<Vec3>, Vec<Vec3>)> = sizes
        .iter()
        .enumerate()
        .map(|(level, &n)| {
            let stride = 1usize << level;
            let loads = rod_loads(&smooth_rod(n), turning);
            (
                (1..10).map(|k| loads.force[stride * k]).collect(),
                (1..10).map(|k| loads.torque[stride * k]).collect(),
            )
        })
        .collect();
    for pick in [|p: &(Vec<Vec3>, Vec<Vec3>)| p.0.clone(), |p: &(Vec<Vec3>, Vec<Vec3>)| p.1.clone()] {
        let (a, b, c) = (pick(&sampled[0]), pick(&sampled[1]), pick(&sampled[2]));
        let ratio = max_gap(&a, &b) / max_gap(&b, &c);
        assert!((ratio - 4.0).abs() < 0.6, "ratio {ratio}");
    }
}

#[test]
fn smooth_rod_loads_balance() {
    let s = smooth_rod(25);
    let l = rod_loads(&s, (0.3, 0.1));
    let scale: f64 = l.force.iter().map(|f| f.norm()).sum::<f64>() * s.spacing();
    assert!(l.net_force(s.spacing()).norm() <= 1e-12 * scale);
    assert!(l.net_torque(&s.nodes, s.spacing()).norm() <= 1e-12 * scale * 2.0);
}

#[test]
fn fast_velocities_match_generic_segments() {
    let s = RodState::initial(20, Vec3::zeros(), table_params()).unwrap();
    let mut s = s;
    for (k, f) in s.frames.iter_mut().enumerate() {
        *f = f.rotated(&(Vec3::new(0.02, 0.01 * k as f64, -0.03)));
    }
    let turning = (0.6, -0.4);
    let cfg = config(Execution::Sequential);
    let (u, w) = rod_velocities(&s, turning, &cfg).unwrap();
    let loads = rod_loads(&s, turning);
    let g: Vec<Vec3> = loads.force.iter().map(|f| -f).collect();
    let m: Vec<Vec3> = loads.torque.iter().map(|t| -t).collect();
    for (i, x) in s.nodes.iter().enumerate() {
        let mut ue = Vec3::zeros();
        let mut we = Vec3::zeros();
        let mut scale = 0.0;
        for k in 0..s.len() - 1 {
            let seg = Segment::new(s.nodes[k], s.nodes[k + 1]).unwrap();
            let (gb, mb) = (g[k + 1] - g[k], m[k + 1] - m[k]);
            let parts = [
                stokeslet_velocity(x, &seg, &g[k], &gb, cfg.eps, cfg.mu),
                rotlet_velocity(x, &seg, &m[k], &mb, cfg.eps, cfg.mu),
            ];
            let curls = [
                rotlet_velocity(x, &seg, &g[k], &gb, cfg.eps, cfg.mu),
                dipole_velocity(x, &seg, &m[k], &mb, cfg.eps, cfg.mu, DipoleVariant::Kirchhoff),
            ];
            ue += parts[0] + parts[1];
            we += (curls[0] + curls[1]) * 0.5;
            scale += parts.iter().chain(&curls).map(|v| v.norm()).sum::<f64>();
        }
        assert!((u[i] - ue).norm() <= 1e-10 * scale, "node {i}");
        assert!((w[i] - we).norm() <= 1e-10 * scale, "node {i}");
    }
}

#[test]
fn frames_stay_orthonormal_every_step() {
    let mut s = RodState::initial(20, Vec3::zeros(), table_params()).unwrap();
    let cfg = config(Execution::Sequential);
    let turning = TurningProcess::Fixed { w1: 1.0, w2: 0.5 };
    for _ in 0..400 {
        s = step_rod(&s, &cfg, &turning).unwrap();
        assert!(s.max_frame_drift() < 1e-10);
    }
}

#[test]
fn seeded_runs_are_bitwise_reproducible() {
    let start = RodState::initial(12, Vec3::zeros(), table_params()).unwrap();
    // redraw every 100 steps so the run crosses several intervals
    let turning = TurningProcess::Random {
        amplitude: 1.75,
        interval: 100.0 * 5e-6,
        seed: 2024,
    };
    let run = |exec| {
        let mut s = start.clone();
        for _ in 0..350 {
            s = step_rod(&s, &config(exec), &turning).unwrap();
        }
        s
    };
    let a = run(Execution::Sequential);
    assert_eq!(a, run(Execution::Sequential));
    assert_eq!(a, run(Execution::Parallel));
    let other = TurningProcess::Random {
        amplitude: 1.75,
        interval: 100.0 * 5e-6,
        seed: 2025,
    };
    let mut b = start.clone();
    for _ in 0..350 {
        b = step_rod(&b, &config(Execution::Sequential), &other).unwrap();
    }
    assert_ne!(a, b);
}

#[test]
fn untwisted_beat_stays_in_its_plane() {
    let mut s = RodState::initial(20, Vec3::new(0.1, 0.2, 0.0), table_params()).unwrap();
    let cfg = config(Execution::Parallel);
    for _ in 0..2000 {
        s = step_rod(&s, &cfg, &TurningProcess::none()).unwrap();
    }
    assert!(s.nodes.iter().all(|x| x.z == 0.0));
    assert!(s.frames.iter().all(|f| (f.d(1) - Vec3::z()).norm() < 1e-14));
    let moved = s.nodes[0] - Vec3::new(0.1, 0.2, 0.0);
    assert!(moved.norm() > 1e-4);
}

#[test]
fn out_of_plane_curvature_lifts_the_rod() {
    let mut s = RodState::initial(20, Vec3::zeros(), table_params()).unwrap();
    let cfg = config(Execution::Parallel);
    let turning = TurningProcess::Fixed { w1: 1.0, w2: 0.0 };
    let excursion = |s: &RodState| (s.nodes.iter().map(|x| x.z * x.z).sum::<f64>() / s.len() as f64).sqrt();
    let mut rms = vec![excursion(&s)];
    for _ in 0..10 {
        for _ in 0..4000 {
            s = step_rod(&s, &cfg, &turning).unwrap();
        }
        rms.push(excursion(&s));
    }
    assert!(rms.windows(2).all(|w| w[1] > w[0]), "{rms:?}");
}

#[test]
fn target_uses_the_wave_and_turning_values() {
    let s = RodState::initial(8, Vec3::zeros(), table_params()).unwrap();
    let wave: TargetCurvature = s.params().wave;
    let t = s.target(0.3, (0.2, -0.1));
    assert_eq!(t, [0.2, wave.wave(0.3, 0.0) - 0.1, 0.0]);
}
