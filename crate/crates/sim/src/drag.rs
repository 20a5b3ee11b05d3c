//! Drag sweep: the sideways force on a straight unit filament at unit speed.

use segstokes_core::mobility::{drag, fit_effective_radius, slender_drag, solve_forces, FilamentMesh};
use segstokes_core::{FluidParam, RegParam, Vec3};
use serde::{Deserialize, Serialize};

use crate::config::{DragPlan, MethodChoice};
use crate::error::SimResult;

pub const DRAG_COLUMNS: [&str; 6] = ["method", "nodes", "eps", "drag", "predicted", "relative_error"];

/// Drag deviations are judged below this `eps`.
pub const DEVIATION_EPS_LIMIT: f64 = 0.04;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragRow {
    pub method: MethodChoice,
    pub nodes: usize,
    pub eps: f64,
    /// Transverse drag divided by viscosity.
    pub drag: f64,
    /// Slender-body drag with `r_e = fitted ratio * eps`.
    pub predicted: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragReport {
    pub rows: Vec<DragRow>,
    /// Least-squares `r_e / eps`.
    pub radius_ratio: f64,
    /// Largest relative error for `eps < 0.04`; `None` if no such row.
    pub max_relative_error: Option<f64>,
}

pub fn run_drag(plan: &DragPlan) -> SimResult<DragReport> {
    let mu = FluidParam::new(plan.common.viscosity)?;
    let exec = plan.common.execution();
    let mesh = FilamentMesh::straight(plan.nodes, plan.length)?;
    let u = vec![Vec3::y(); plan.nodes];
    let mut drags = Vec::with_capacity(plan.eps.len());
    for &e in &plan.eps {
        let sol = solve_forces(&mesh, &u, RegParam::new(e)?, mu, plan.method.into(), exec)?;
        let d = drag(&mesh, &sol.forces).y / plan.common.viscosity;
        log::info!("drag {:?} N = {} eps = {e:.4e}: {d:.6}", plan.method, plan.nodes);
        drags.push(d);
    }
    // The slender-body value is per unit length, speed and viscosity.
    let scaled: Vec<f64> = drags.iter().map(|d| d / plan.length).collect();
    let rel_eps: Vec<f64> = plan.eps.iter().map(|e| e / plan.length).collect();
    let ratio = fit_effective_radius(&rel_eps, &scaled)?;
    let rows: Vec<DragRow> = plan
        .eps
        .iter()
        .zip(&drags)
        .map(|(&e, &d)| {
            let predicted = slender_drag(ratio * e / plan.length) * plan.length;
            DragRow {
                method: plan.method,
                nodes: plan.nodes,
                eps: e,
                drag: d,
                predicted,
                relative_error: (d - predicted).abs() / predicted,
            }
        })
        .collect();
    let max_relative_error = rows
        .iter()
        .filter(|r| r.eps < DEVIATION_EPS_LIMIT * plan.length)
        .map(|r| r.relative_error)
        .reduce(f64::max);
    Ok(DragReport {
        rows,
        radius_ratio: ratio,
        max_relative_error,
    })
}
