//! Leak sweep: a straight unit filament translating sideways at unit speed.

use segstokes_core::mobility::{leak, solve_forces, FilamentMesh, Method};
use segstokes_core::{FluidParam, RegParam, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::{LeakPlan, MethodChoice};
use crate::error::SimResult;

pub const LEAK_COLUMNS: [&str; 8] = ["method", "nodes", "h", "eps", "eps_over_h", "leak", "scaled_leak", "condition"];

/// Range of `eps / h` used for the point-force decay fit.
pub const DECAY_RANGE: (f64, f64) = (0.2, 1.0);
/// Range of `eps / h` over which segment curves are compared.
pub const COLLAPSE_RANGE: (f64, f64) = (0.2, 3.0);
pub const FIT_CHECKS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakRow {
    pub method: MethodChoice,
    pub nodes: usize,
    pub h: f64,
    pub eps: f64,
    pub eps_over_h: f64,
    pub leak: f64,
    /// `h^(-1/2) * leak`.
    pub scaled_leak: f64,
    pub condition: f64,
}

/// `log10 L = log10(prefactor) - exponent * eps / h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub nodes: Option<usize>,
    pub exponent: f64,
    pub prefactor: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCheck {
    pub nodes: usize,
    pub eps_over_h: f64,
    pub scaled_leak: f64,
    pub empirical: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LeakReport {
    pub rows: Vec<LeakRow>,
    /// Point-force fits, pooled first, then per node count.
    pub mrs_decay: Vec<DecayFit>,
    /// Largest `|a - b| / min(a, b)` between scaled segment leaks of
    /// different node counts at the same `eps / h`.
    pub segment_collapse: Option<f64>,
    pub segment_fit_checks: Vec<FitCheck>,
}

/// `0.25 (10^-x + 0.63 * 10^(-0.46 x))` for the scaled segment leak.
pub fn segment_leak_fit(eps_over_h: f64) -> f64 {
    0.25 * (10f64.powf(-eps_over_h) + 0.63 * 10f64.powf(-0.46 * eps_over_h))
}

/// `0.9 * 10^(-2.3 x)` for the point-force leak.
pub fn mrs_leak_fit(eps_over_h: f64) -> f64 {
    0.9 * 10f64.powf(-2.3 * eps_over_h)
}

pub fn run_leak(plan: &LeakPlan) -> SimResult<LeakReport> {
    let mu = FluidParam::new(plan.common.viscosity)?;
    let exec = plan.common.execution();
    let u = Vec3::y();
    let mut rows = Vec::new();
    for &n in &plan.nodes {
        let mesh = FilamentMesh::straight(n, plan.length)?;
        let h = mesh.spacing();
        let eps_values: Vec<(f64, f64)> = match plan.eps {
            Some(e) => vec![(e, e / h)],
            None => plan.eps_over_h.iter().map(|r| (r * h, *r)).collect(),
        };
        let checks = plan.checks_per_segment * (n - 1) + 1;
        for &method in &plan.methods {
            for &(e, ratio) in &eps_values {
                let eps = RegParam::new(e)?;
                let m: Method = method.into();
                let sol = solve_forces(&mesh, &vec![u; n], eps, mu, m, exec)?;
                let l = leak(&mesh, &sol.forces, &u, eps, mu, checks, m, exec)?;
                log::info!("leak {method:?} N = {n} eps/h = {ratio:.4}: {l:.4e}");
                rows.push(LeakRow {
                    method,
                    nodes: n,
                    h,
                    eps: e,
                    eps_over_h: ratio,
                    leak: l,
                    scaled_leak: l / h.sqrt(),
                    condition: sol.condition,
                });
            }
        }
    }
    Ok(analyse(rows))
}

pub fn analyse(rows: Vec<LeakRow>) -> LeakReport {
    let in_range = |r: &LeakRow, (a, b): (f64, f64)| r.eps_over_h >= a - 1e-12 && r.eps_over_h <= b + 1e-12;
    let mrs: Vec<&LeakRow> = rows
        .iter()
        .filter(|r| r.method == MethodChoice::Mrs && in_range(r, DECAY_RANGE) && r.leak > 0.0)
        .collect();
    let mut nodes: Vec<usize> = rows.iter().map(|r| r.nodes).collect();
    nodes.sort_unstable();
    nodes.dedup();

    let mut mrs_decay = Vec::new();
    let mut groups = vec![(None, mrs.clone())];
    groups.extend(nodes.iter().map(|&n| (Some(n), mrs.iter().copied().filter(|r| r.nodes == n).collect())));
    for (n, group) in groups {
        let pts: Vec<(f64, f64)> = group.iter().map(|r| (r.eps_over_h, r.leak.log10())).collect();
        if let Some((slope, intercept)) = linear_fit(&pts) {
            mrs_decay.push(DecayFit {
                nodes: n,
                exponent: -slope,
                prefactor: 10f64.powf(intercept),
                points: pts.len(),
            });
        }
    }

    let seg: Vec<&LeakRow> = rows
        .iter()
        .filter(|r| r.method == MethodChoice::Segments && in_range(r, COLLAPSE_RANGE))
        .collect();
    let mut collapse: Option<f64> = None;
    for a in &seg {
        for b in &seg {
            if a.nodes < b.nodes && (a.eps_over_h - b.eps_over_h).abs() <= 1e-9 * a.eps_over_h {
                let d = (a.scaled_leak - b.scaled_leak).abs() / a.scaled_leak.min(b.scaled_leak);
                collapse = Some(collapse.map_or(d, |c| c.max(d)));
            }
        }
    }

    let segment_fit_checks = rows
        .iter()
        .filter(|r| r.method == MethodChoice::Segments)
        .filter(|r| FIT_CHECKS.iter().any(|x| (r.eps_over_h - x).abs() <= 1e-9))
        .map(|r| {
            let empirical = segment_leak_fit(r.eps_over_h);
            FitCheck {
                nodes: r.nodes,
                eps_over_h: r.eps_over_h,
                scaled_leak: r.scaled_leak,
                empirical,
                ratio: r.scaled_leak / empirical,
            }
        })
        .collect();

    LeakReport {
        rows,
        mrs_decay,
        segment_collapse: collapse,
        segment_fit_checks,
    }
}

/// Least-squares `(slope, intercept)`; `None` for fewer than two distinct abscissae.
pub fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
