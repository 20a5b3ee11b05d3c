use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segstokes_core::kernels::{point_dipole, point_pressure, point_rotlet, point_stokeslet};
use segstokes_core::segment::{curl_segment, dipole_segment, pressure_segment, rotlet_segment, stokeslet_segment};
use segstokes_core::wall::{image_system_segment, wall_stokeslet_segment};
use segstokes_core::{DipoleVariant, FluidParam, PressureKind, RegParam, Segment, SegmentLoad, Vec3};
use segstokes_oracle::{curl, divergence, frobenius, integrate, jacobian};

const MU: f64 = 0.7;

fn mu() -> FluidParam {
    FluidParam::new(MU).unwrap()
}

/// `L int_0^1 k(y(alpha), w(alpha)) d alpha` and the integral of its max-norm.
fn compose<F: Fn(&Vec3, &Vec3) -> Vec3>(seg: &Segment, load: &SegmentLoad, kernel: F) -> (Vec3, f64) {
    let r = integrate(
        |a| {
            let u = kernel(&seg.point(a), &load.at(a));
            [u.x, u.y, u.z]
        },
        0.0,
        1.0,
        1e-13,
    );
    let l = seg.length();
    (Vec3::new(r.value[0], r.value[1], r.value[2]) * l, r.magnitude * l)
}

fn random_vec(rng: &mut ChaCha8Rng, r: f64) -> Vec3 {
    Vec3::new(rng.random_range(-r..r), rng.random_range(-r..r), rng.random_range(-r..r))
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = random_vec(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n < 1.0 {
            return v / n;
        }
    }
}

struct Case {
    xhat: Vec3,
    seg: Segment,
    eps: RegParam,
    a: Vec3,
    b: Vec3,
}

/// Random geometry with points down to 1e-3 L from the segment and
/// eps / L from 1e-3 to 10.
fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let y0 = random_vec(rng, 1.0);
    let len = rng.random_range(0.1..1.5);
    let seg = Segment::new(y0, y0 + random_unit(rng) * len).unwrap();
    let eps = RegParam::new(len * 10f64.powf(rng.random_range(-3.0..1.0))).unwrap();
    let dist = len * 10f64.powf(rng.random_range(-3.0..0.5));
    let xhat = seg.point(rng.random_range(-0.3..1.3)) + random_unit(rng) * dist;
    Case {
        xhat,
        seg,
        eps,
        a: random_vec(rng, 1.0),
        b: random_vec(rng, 1.0),
    }
}

fn assert_close(got: Vec3, (exact, magnitude): (Vec3, f64), tol: f64, what: &str) {
    let err = (got - exact).norm();
    assert!(err <= tol * magnitude, "{what}: {got:?} vs {exact:?} (error {err:e}, magnitude {magnitude:e})");
}

#[test]
fn every_kernel_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..250 {
        let c = random_case(&mut rng);
        let (eps, m) = (c.eps, mu());
        let x = c.xhat;
        let force = SegmentLoad::new(segstokes_core::LoadKind::Force, c.a, c.b);
        let torque = SegmentLoad::new(segstokes_core::LoadKind::Torque, c.a, c.b);
        let dip = SegmentLoad::new(segstokes_core::LoadKind::Dipole, c.a, c.b);

        let u = stokeslet_segment(&x, &c.seg, &force, eps, m).unwrap();
        assert_close(u, compose(&c.seg, &force, |y, f| point_stokeslet(&x, y, f, eps, m)), 1e-8, "stokeslet");

        let u = rotlet_segment(&x, &c.seg, &torque, eps, m).unwrap();
        assert_close(u, compose(&c.seg, &torque, |y, t| point_rotlet(&x, y, t, eps, m)), 1e-8, "rotlet");

        for variant in [DipoleVariant::Standard, DipoleVariant::Kirchhoff] {
            let u = dipole_segment(&x, &c.seg, &dip, eps, m, variant).unwrap();
            let exact = compose(&c.seg, &dip, |y, g| point_dipole(&x, y, g, eps, m, variant));
            assert_close(u, exact, 1e-8, "dipole");
        }

        for (load, kind) in [(force, PressureKind::Stokeslet), (dip, PressureKind::Dipole)] {
            let p = pressure_segment(&x, &c.seg, &load, eps).unwrap();
            let exact = compose(&c.seg, &load, |y, w| Vec3::new(point_pressure(&x, y, w, eps.get(), kind), 0.0, 0.0));
            assert_close(Vec3::new(p, 0.0, 0.0), exact, 1e-8, "pressure");
        }
    }
}

/// Image system written with explicit index loops over the tensors.
fn tensor_image(xhat: &Vec3, ystar: &Vec3, f: &Vec3, eps: f64) -> Vec3 {
    let h = ystar[2];
    let y = [ystar[0], ystar[1], -h];
    let x: [f64; 3] = std::array::from_fn(|i| xhat[i] - y[i]);
    let q = [-f[0], -f[1], f[2]];
    let e2 = eps * eps;
    let r2 = x.iter().map(|v| v * v).sum::<f64>() + e2;
    let r = r2.sqrt();
    let (r3, r5) = (r2 * r, r2 * r2 * r);
    let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    let s = |i: usize, j: usize| d(i, j) * (1.0 / r + e2 / r3) + x[i] * x[j] / r3;
    let doublet = |i: usize, j: usize, k: usize| {
        -d(i, j) * x[k] * (1.0 / r3 + 3.0 * e2 / r5) + (d(i, k) * x[j] + x[i] * d(j, k)) / r3
            - 3.0 * x[i] * x[j] * x[k] / r5
    };
    let pd = |i: usize, j: usize| -d(i, j) * (2.0 / r3 - 6.0 * e2 / r5) + 6.0 * x[i] * x[j] / r5;
    let rot = [x[2] * f[0], x[2] * f[1], -(x[0] * f[0] + x[1] * f[1])];
    let mut u = Vec3::zeros();
    for i in 0..3 {
        let mut ui = 2.0 * h * 3.0 * e2 / r5 * rot[i];
        for j in 0..3 {
            ui += -s(i, j) * f[j] + 2.0 * h * doublet(i, 2, j) * q[j] + h * h * pd(i, j) * q[j];
        }
        u[i] = ui;
    }
    u / (8.0 * std::f64::consts::PI * MU)
}

#[test]
fn image_system_matches_tensor_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let c = random_case(&mut rng);
        let lift = Vec3::new(0.0, 0.0, 2.0 + rng.random_range(0.0..1.0));
        let seg = Segment::new(c.seg.y0() + lift, c.seg.y1() + lift).unwrap();
        let xhat = c.xhat + lift;
        if xhat.z <= 0.0 {
            continue;
        }
        let load = SegmentLoad::force(c.a, c.a + c.b);
        let u = image_system_segment(&xhat, &seg, &load, c.eps, mu()).unwrap();
        let exact = compose(&seg, &load, |y, f| tensor_image(&xhat, y, f, c.eps.get()));
        assert_close(u, exact, 1e-8, "image");
    }
}

#[test]
fn wall_cancels_on_two_hundred_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seg = Segment::new(Vec3::new(0.1, -0.2, 0.15), Vec3::new(0.4, 0.1, 0.05)).unwrap();
    let load = SegmentLoad::force(Vec3::new(0.3, -1.0, 0.6), Vec3::new(-0.2, 0.5, 1.1));
    let eps = RegParam::new(0.02).unwrap();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..200 {
        let x = Vec3::new(rng.random_range(-1.0..1.5), rng.random_range(-1.0..1.0), 0.0);
        let free = stokeslet_segment(&x, &seg, &load, eps, mu()).unwrap();
        let total = wall_stokeslet_segment(&x, &seg, &load, eps, mu()).unwrap();
        worst = worst.max(total.norm());
        scale = scale.max(free.norm());
    }
    assert!(worst < 1e-12 * scale, "{worst:e} vs {scale:e}");
}

fn field<F: Fn(&Vec3) -> Vec3>(f: F) -> impl Fn([f64; 3]) -> [f64; 3] {
    move |p| {
        let u = f(&Vec3::new(p[0], p[1], p[2]));
        [u.x, u.y, u.z]
    }
}

#[test]
fn curls_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let mut c = random_case(&mut rng);
        c.eps = RegParam::new(c.eps.get().max(0.02)).unwrap();
        let (eps, m) = (c.eps, mu());
        let step = 1e-3 * c.eps.get().min((c.xhat - c.seg.point(0.5)).norm().max(c.eps.get()));
        for kind in [segstokes_core::LoadKind::Force, segstokes_core::LoadKind::Torque] {
            let load = SegmentLoad::new(kind, c.a, c.b);
            let u = |x: &Vec3| match kind {
                segstokes_core::LoadKind::Force => stokeslet_segment(x, &c.seg, &load, eps, m).unwrap(),
                _ => rotlet_segment(x, &c.seg, &load, eps, m).unwrap(),
            };
            let jac = jacobian(field(u), [c.xhat.x, c.xhat.y, c.xhat.z], step);
            let fd = curl(&jac);
            let w = curl_segment(&c.xhat, &c.seg, &load, eps, m).unwrap();
            let err = (w - Vec3::new(fd[0], fd[1], fd[2])).norm();
            assert!(err <= 1e-6 * frobenius(&jac), "{kind:?}: {w:?} vs {fd:?}");
        }
    }
}

#[test]
fn segment_fields_are_divergence_free() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..100 {
        let mut c = random_case(&mut rng);
        c.eps = RegParam::new(c.eps.get().max(0.02)).unwrap();
        let (eps, m) = (c.eps, mu());
        let step = 1e-3 * c.eps.get();
        let at = [c.xhat.x, c.xhat.y, c.xhat.z];
        let f = SegmentLoad::force(c.a, c.b);
        let t = SegmentLoad::torque(c.a, c.b);
        let g = SegmentLoad::dipole(c.a, c.b);
        let fields: Vec<Box<dyn Fn(&Vec3) -> Vec3>> = vec![
            Box::new(|x| stokeslet_segment(x, &c.seg, &f, eps, m).unwrap()),
            Box::new(|x| rotlet_segment(x, &c.seg, &t, eps, m).unwrap()),
            Box::new(|x| dipole_segment(x, &c.seg, &g, eps, m, DipoleVariant::Standard).unwrap()),
            Box::new(|x| dipole_segment(x, &c.seg, &g, eps, m, DipoleVariant::Kirchhoff).unwrap()),
        ];
        for u in &fields {
            let jac = jacobian(field(u), at, step);
            assert!(divergence(&jac).abs() <= 1e-6 * frobenius(&jac));
        }
        let lifted = Segment::new(c.seg.y0() + Vec3::z() * 3.0, c.seg.y1() + Vec3::z() * 3.0).unwrap();
        let above = [at[0], at[1], at[2] + 3.0];
        let jac = jacobian(field(|x| wall_stokeslet_segment(x, &lifted, &f, eps, m).unwrap()), above, step);
        assert!(divergence(&jac).abs() <= 1e-6 * frobenius(&jac));
    }
}

#[test]
fn splitting_a_segment_changes_nothing() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let c = random_case(&mut rng);
        let (eps, m) = (c.eps, mu());
        let cut = rng.random_range(0.05..0.95);
        let mid = c.seg.point(cut);
        let (s1, s2) = (Segment::new(*c.seg.y0(), mid).unwrap(), Segment::new(mid, *c.seg.y1()).unwrap());
        let w_mid = c.a + c.b * cut;
        let w_end = c.a + c.b;
        for kind in [segstokes_core::LoadKind::Force, segstokes_core::LoadKind::Torque, segstokes_core::LoadKind::Dipole] {
            let whole = SegmentLoad::new(kind, c.a, c.b);
            let l1 = SegmentLoad::from_endpoints(kind, c.a, w_mid);
            let l2 = SegmentLoad::from_endpoints(kind, w_mid, w_end);
            let eval = |s: &Segment, l: &SegmentLoad| match kind {
                segstokes_core::LoadKind::Force => stokeslet_segment(&c.xhat, s, l, eps, m).unwrap(),
                segstokes_core::LoadKind::Torque => rotlet_segment(&c.xhat, s, l, eps, m).unwrap(),
                segstokes_core::LoadKind::Dipole => dipole_segment(&c.xhat, s, l, eps, m, DipoleVariant::Kirchhoff).unwrap(),
            };
            let (u, v1, v2) = (eval(&c.seg, &whole), eval(&s1, &l1), eval(&s2, &l2));
            let point = |y: &Vec3, w: &Vec3| match kind {
                segstokes_core::LoadKind::Force => point_stokeslet(&c.xhat, y, w, eps, m),
                segstokes_core::LoadKind::Torque => point_rotlet(&c.xhat, y, w, eps, m),
                segstokes_core::LoadKind::Dipole => point_dipole(&c.xhat, y, w, eps, m, DipoleVariant::Kirchhoff),
            };
            let scale = compose(&c.seg, &whole, point).1;
            let err = (u - v1 - v2).norm() / scale;
            assert!(err <= 1e-12, "{kind:?}: relative {err:e}, eps {}, cut {cut}, point {:?}, seg {:?}", eps.get(), c.xhat, c.seg);
        }
    }
}

fn rotation(axis: Vec3, angle: f64) -> nalgebra::Rotation3<f64> {
    nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
}

#[test]
fn rigid_motions_commute() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..100 {
        let c = random_case(&mut rng);
        let (eps, m) = (c.eps, mu());
        let rot = rotation(random_unit(&mut rng), rng.random_range(0.0..6.0));
        let shift = random_vec(&mut rng, 2.0);
        let moved = Segment::new(rot * c.seg.y0() + shift, rot * c.seg.y1() + shift).unwrap();
        let xm = rot * c.xhat + shift;
        let f = SegmentLoad::force(c.a, c.a + c.b);
        let fm = SegmentLoad::force(rot * c.a, rot * (c.a + c.b));
        let u = stokeslet_segment(&c.xhat, &c.seg, &f, eps, m).unwrap();
        let um = stokeslet_segment(&xm, &moved, &fm, eps, m).unwrap();
        assert!((rot * u - um).norm() <= 1e-9 * u.norm().max(1e-12));
        let t = SegmentLoad::torque(c.a, c.a + c.b);
        let tm = SegmentLoad::torque(rot * c.a, rot * (c.a + c.b));
        let w = rotlet_segment(&c.xhat, &c.seg, &t, eps, m).unwrap();
        let wm = rotlet_segment(&xm, &moved, &tm, eps, m).unwrap();
        assert!((rot * w - wm).norm() <= 1e-9 * w.norm().max(1e-12));
    }
}

#[test]
fn point_kernels_are_divergence_free_and_curl_to_rotlet() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    let m = mu();
    for _ in 0..100 {
        let eps = RegParam::new(rng.random_range(0.05..0.5)).unwrap();
        let y0 = random_vec(&mut rng, 1.0);
        let xhat = y0 + random_unit(&mut rng) * rng.random_range(0.01..2.0);
        let f = random_vec(&mut rng, 1.0);
        let step = 1e-5 * (xhat - y0).norm().max(eps.get()) * 100.0;
        let at = [xhat.x, xhat.y, xhat.z];
        let kernels: Vec<Box<dyn Fn(&Vec3) -> Vec3>> = vec![
            Box::new(|x| point_stokeslet(x, &y0, &f, eps, m)),
            Box::new(|x| point_rotlet(x, &y0, &f, eps, m)),
            Box::new(|x| point_dipole(x, &y0, &f, eps, m, DipoleVariant::Standard)),
            Box::new(|x| point_dipole(x, &y0, &f, eps, m, DipoleVariant::Kirchhoff)),
        ];
        for k in &kernels {
            let jac = jacobian(field(k), at, step);
            assert!(divergence(&jac).abs() < 1e-6 * frobenius(&jac));
        }
        let jac = jacobian(field(|x| point_stokeslet(x, &y0, &f, eps, m)), at, step);
        let c = curl(&jac);
        let x = xhat - y0;
        let r2 = x.norm_squared() + eps.squared();
        let r = r2.sqrt();
        let expect = f.cross(&x) * ((2.0 / (r2 * r) + 3.0 * eps.squared() / (r2 * r2 * r)) * m.prefactor());
        assert!((Vec3::new(c[0], c[1], c[2]) - expect).norm() <= 1e-5 * expect.norm().max(1e-12));
    }
}

#[test]
fn far_field_error_decays_quadratically() {
    let m = mu();
    let f = Vec3::new(0.3, -0.7, 0.2);
    let dir = Vec3::new(0.6, 0.0, 0.8);
    let err = |ratio: f64| {
        let eps = RegParam::new(1.0 / ratio).unwrap();
        let reg = point_stokeslet(&dir, &Vec3::zeros(), &f, eps, m);
        let sing = segstokes_core::kernels::singular_stokeslet(&dir, &Vec3::zeros(), &f, m);
        (reg - sing).norm() / sing.norm()
    };
    for ratio in [10.0, 40.0, 160.0] {
        let rate = (err(ratio) / err(2.0 * ratio)).log2();
        assert!((rate - 2.0).abs() < 0.05, "rate {rate}");
    }
}

fn arb_vec(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernels_are_linear(xhat in arb_vec(1.0), y0 in arb_vec(1.0), d in arb_vec(1.0),
                          f in arb_vec(1.0), g in arb_vec(1.0), fb in arb_vec(1.0), gb in arb_vec(1.0),
                          a in -2.0f64..2.0, b in -2.0f64..2.0, eps in 1e-3f64..1.0) {
        prop_assume!(d.norm() > 1e-2);
        let (e, m) = (RegParam::new(eps).unwrap(), mu());
        let seg = Segment::new(y0, y0 + d).unwrap();
        let close = |u: Vec3, v: Vec3, s: f64| (u - v).norm() <= 1e-12 * s.max(1e-300);
        let lin = |k: &dyn Fn(&Vec3, &Vec3) -> Vec3| {
            let (uf, ug, uc) = (k(&f, &fb), k(&g, &gb), k(&(f * a + g * b), &(fb * a + gb * b)));
            close(uc, uf * a + ug * b, uf.norm() * a.abs() + ug.norm() * b.abs() + uc.norm())
        };
        prop_assert!(lin(&|p, _| point_stokeslet(&xhat, &y0, p, e, m)));
        prop_assert!(lin(&|p, _| point_rotlet(&xhat, &y0, p, e, m)));
        prop_assert!(lin(&|p, _| point_dipole(&xhat, &y0, p, e, m, DipoleVariant::Kirchhoff)));
        prop_assert!(lin(&|p, q| stokeslet_segment(&xhat, &seg, &SegmentLoad::force(*p, *q), e, m).unwrap()));
        prop_assert!(lin(&|p, q| rotlet_segment(&xhat, &seg, &SegmentLoad::torque(*p, *q), e, m).unwrap()));
        prop_assert!(lin(&|p, q| dipole_segment(&xhat, &seg, &SegmentLoad::dipole(*p, *q), e, m, DipoleVariant::Standard).unwrap()));
    }
}
