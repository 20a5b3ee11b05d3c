//! Reference numerics for the test suites.
//!
//! Nothing in here knows about segments or recursions: the quadrature
//! integrates whatever closure it is given, and the finite-difference
//! helpers only see a vector field. That keeps the oracles independent of
//! the analytic code paths they are used to check.

use std::collections::BinaryHeap;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// 10-point Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<const D: usize> {
    pub value: [f64; D],
    /// Integral of the max-norm of the integrand; a cancellation-free scale.
    pub magnitude: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Piece<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    magnitude: f64,
    error: f64,
}

impl<const D: usize> PartialEq for Piece<D> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<const D: usize> Eq for Piece<D> {}
impl<const D: usize> PartialOrd for Piece<D> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<const D: usize> Ord for Piece<D> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<const D: usize, F: Fn(f64) -> [f64; D]>(f: &F, a: f64, b: f64) -> Piece<D> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; D];
    let mut gauss = [0.0; D];
    let mut magnitude = 0.0;
    let add = |x: f64, wk: f64, wg: f64, kron: &mut [f64; D], gauss: &mut [f64; D]| {
        let v = f(x);
        let mut m = 0.0_f64;
        for d in 0..D {
            kron[d] += wk * v[d];
            gauss[d] += wg * v[d];
            m = m.max(v[d].abs());
        }
        m * wk
    };
    magnitude += add(c, WGK[10], 0.0, &mut kron, &mut gauss);
    for i in 0..10 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        let dx = h * XGK[i];
        magnitude += add(c - dx, WGK[i], wg, &mut kron, &mut gauss);
        magnitude += add(c + dx, WGK[i], wg, &mut kron, &mut gauss);
    }
    let mut error = 0.0_f64;
    for d in 0..D {
        kron[d] *= h;
        gauss[d] *= h;
        error = error.max((kron[d] - gauss[d]).abs());
    }
    Piece {
        a,
        b,
        value: kron,
        magnitude: magnitude * h.abs(),
        error,
    }
}

/// Globally adaptive Gauss-Kronrod (10/21) integration of a vector-valued
/// integrand over `[a, b]`.
///
/// Refinement stops once the summed error estimate is below
/// `rel_tol * magnitude`, where `magnitude` is the integral of the
/// integrand's max-norm.
pub fn integrate<const D: usize, F: Fn(f64) -> [f64; D]>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Integral<D> {
    const MAX_INTERVALS: usize = 20_000;
    let mut heap = BinaryHeap::new();
    heap.push(gk21(&f, a, b));
    loop {
        let (err, mag) = heap
            .iter()
            .fold((0.0, 0.0), |(e, m), p| (e + p.error, m + p.magnitude));
        if err <= rel_tol * mag || heap.len() >= MAX_INTERVALS {
            break;
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        heap.push(gk21(&f, worst.a, mid));
        heap.push(gk21(&f, mid, worst.b));
    }
    // Sum small pieces first.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.magnitude.total_cmp(&q.magnitude));
    let mut value = [0.0; D];
    let mut magnitude = 0.0;
    let mut error = 0.0;
    for p in &pieces {
        for d in 0..D {
            value[d] += p.value[d];
        }
        magnitude += p.magnitude;
        error += p.error;
    }
    Integral {
        value,
        magnitude,
        error,
        intervals: pieces.len(),
    }
}

/// Scalar convenience wrapper around [`integrate`].
pub fn integrate_scalar<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let r = integrate(|x| [f(x)], a, b, rel_tol);
    (r.value[0], r.magnitude)
}

/// Jacobian of a 3-vector field by fourth-order central differences.
/// `jac[i][j] = d u_i / d x_j`.
pub fn jacobian<F: Fn([f64; 3]) -> [f64; 3]>(u: F, at: [f64; 3], step: f64) -> [[f64; 3]; 3] {
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let shifted = |k: f64| {
            let mut p = at;
            p[j] += k * step;
            u(p)
        };
        let (m2, m1, p1, p2) = (shifted(-2.0), shifted(-1.0), shifted(1.0), shifted(2.0));
        for i in 0..3 {
            jac[i][j] = (m2[i] - 8.0 * m1[i] + 8.0 * p1[i] - p2[i]) / (12.0 * step);
        }
    }
    jac
}

pub fn divergence(jac: &[[f64; 3]; 3]) -> f64 {
    jac[0][0] + jac[1][1] + jac[2][2]
}

pub fn curl(jac: &[[f64; 3]; 3]) -> [f64; 3] {
    [
        jac[2][1] - jac[1][2],
        jac[0][2] - jac[2][0],
        jac[1][0] - jac[0][1],
    ]
}

/// Frobenius norm of a Jacobian, used to scale divergence checks.
pub fn frobenius(jac: &[[f64; 3]; 3]) -> f64 {
    jac.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Central-difference derivative of a scalar function.
pub fn derivative<F: Fn(f64) -> f64>(f: F, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let (v, _) = integrate_scalar(|x| 3.0 * x * x - x + 2.0, 0.0, 2.0, 1e-15);
        assert!((v - (8.0 - 2.0 + 4.0)).abs() < 1e-13);
    }

    #[test]
    fn resolves_sharp_peak() {
        // Lorentzian of width 1e-4 centred inside the interval.
        let w = 1e-4_f64;
        let (v, _) = integrate_scalar(|x| w / ((x - 0.3).powi(2) + w * w), 0.0, 1.0, 1e-14);
        let exact = (0.7 / w).atan() + (0.3 / w).atan();
        assert!((v - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn asinh_integral() {
        let (v, _) = integrate_scalar(|a| 1.0 / (a * a + 1.0).sqrt(), 0.0, 1.0, 1e-15);
        assert!((v - 1.0_f64.asinh()).abs() < 1e-14);
    }

    #[test]
    fn curl_of_rigid_rotation() {
        let jac = jacobian(|p| [-p[1], p[0], 0.0], [0.3, -0.2, 0.5], 1e-3);
        let c = curl(&jac);
        assert!((c[2] - 2.0).abs() < 1e-10);
        assert!(divergence(&jac).abs() < 1e-10);
    }
}
