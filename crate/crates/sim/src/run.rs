//! Run an experiment plan and write its files.

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::Plan;
use crate::drag::{run_drag, DRAG_COLUMNS};
use crate::error::{SimError, SimResult};
use crate::leak::{run_leak, LEAK_COLUMNS};
use crate::output::{
    write_summary, write_table, Status, Summary, TrajectoryWriter, DRAG_FILE, DUMP_FILE, LEAK_FILE, SUMMARY_FILE,
    TRAJECTORY_FILE,
};
use crate::swim::run_swim;

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("report serializes")
}

/// Report as JSON without its per-row table, which lives in a CSV.
fn without_rows<T: Serialize>(v: &T) -> serde_json::Value {
    let mut value = to_value(v);
    if let Some(map) = value.as_object_mut() {
        map.remove("rows");
    }
    value
}

/// Run `plan`, writing every output under its `out` directory. A summary is
/// written on failure too, with the status matching the exit code.
pub fn run(plan: &Plan) -> SimResult<Summary> {
    let common = plan.common();
    let dir = common.out.clone();
    std::fs::create_dir_all(&dir).map_err(|e| SimError::output(&dir, e))?;
    let start = Instant::now();
    let mut files = vec![SUMMARY_FILE.to_string()];
    let outcome = execute(plan, &dir, &mut files);
    let (status, message, results) = match &outcome {
        Ok(results) => (Status::Ok, None, results.clone()),
        Err(e) => (Status::from_exit_code(e.exit_code()), Some(e.to_string()), serde_json::Value::Null),
    };
    let summary = Summary {
        experiment: common.experiment,
        status,
        message,
        version: env!("CARGO_PKG_VERSION").to_string(),
        parameters: to_value(plan),
        results,
        files,
        wall_seconds: (!common.deterministic).then(|| start.elapsed().as_secs_f64()),
    };
    write_summary(&dir, &summary)?;
    outcome.map(|_| summary)
}

fn execute(plan: &Plan, dir: &Path, files: &mut Vec<String>) -> SimResult<serde_json::Value> {
    match plan {
        Plan::Leak(p) => {
            let report = run_leak(p)?;
            write_table(&dir.join(LEAK_FILE), &LEAK_COLUMNS, &report.rows)?;
            files.push(LEAK_FILE.into());
            Ok(without_rows(&report))
        }
        Plan::Drag(p) => {
            let report = run_drag(p)?;
            write_table(&dir.join(DRAG_FILE), &DRAG_COLUMNS, &report.rows)?;
            files.push(DRAG_FILE.into());
            Ok(without_rows(&report))
        }
        Plan::Swim(p) => {
            let path = dir.join(TRAJECTORY_FILE);
            let mut writer = TrajectoryWriter::create(&path)?;
            files.push(TRAJECTORY_FILE.into());
            let result = run_swim(p, |rec| writer.write(rec));
            writer.finish()?;
            match result {
                Ok(report) => Ok(to_value(&report)),
                Err(failure) => {
                    if let Some(last) = failure.last_state {
                        let dump = dir.join(DUMP_FILE);
                        let mut w = TrajectoryWriter::create(&dump)?;
                        w.write(&last)?;
                        w.finish()?;
                        files.push(DUMP_FILE.into());
                        log::error!("state at t = {} written to {}", last.time, dump.display());
                    }
                    Err(failure.error)
                }
            }
        }
    }
}
