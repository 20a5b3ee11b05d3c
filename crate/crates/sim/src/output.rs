//! Files written by a run.
//!
//! `trajectory.csv` has one row per snapshot per node with the columns in
//! [`TRAJECTORY_COLUMNS`]. Force densities and director frames are empty
//! cells when a model does not carry them. Floats are written in shortest
//! round-trip form.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use segstokes_core::rod::Frame;
use segstokes_core::Vec3;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::error::{SimError, SimResult};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const LEAK_FILE: &str = "leak_curve.csv";
pub const DRAG_FILE: &str = "drag_curve.csv";
pub const DUMP_FILE: &str = "blowup_state.csv";

pub const TRAJECTORY_COLUMNS: [&str; 17] = [
    "time", "node", "x", "y", "z", "fx", "fy", "fz", "d1x", "d1y", "d1z", "d2x", "d2y", "d2z", "d3x", "d3y", "d3z",
];

/// One snapshot of a swimmer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub time: f64,
    pub nodes: Vec<Vec3>,
    pub forces: Option<Vec<Vec3>>,
    pub frames: Option<Vec<Frame>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    time: f64,
    node: usize,
    x: f64,
    y: f64,
    z: f64,
    fx: Option<f64>,
    fy: Option<f64>,
    fz: Option<f64>,
    d1x: Option<f64>,
    d1y: Option<f64>,
    d1z: Option<f64>,
    d2x: Option<f64>,
    d2y: Option<f64>,
    d2z: Option<f64>,
    d3x: Option<f64>,
    d3y: Option<f64>,
    d3z: Option<f64>,
}

impl Row {
    fn new(time: f64, node: usize, x: &Vec3, f: Option<&Vec3>, d: Option<&Frame>) -> Self {
        let fc = |i: usize| f.map(|f| f[i]);
        let dc = |k: usize, i: usize| d.map(|d| d.0[k][i]);
        Self {
            time,
            node,
            x: x.x,
            y: x.y,
            z: x.z,
            fx: fc(0),
            fy: fc(1),
            fz: fc(2),
            d1x: dc(0, 0),
            d1y: dc(0, 1),
            d1z: dc(0, 2),
            d2x: dc(1, 0),
            d2y: dc(1, 1),
            d2z: dc(1, 2),
            d3x: dc(2, 0),
            d3y: dc(2, 1),
            d3z: dc(2, 2),
        }
    }

    fn force(&self) -> Option<Vec3> {
        Some(Vec3::new(self.fx?, self.fy?, self.fz?))
    }

    fn frame(&self) -> Option<Frame> {
        Some(Frame([
            Vec3::new(self.d1x?, self.d1y?, self.d1z?),
            Vec3::new(self.d2x?, self.d2y?, self.d2z?),
            Vec3::new(self.d3x?, self.d3y?, self.d3z?),
        ]))
    }
}

/// Streams snapshots to CSV, enforcing increasing times and a fixed node count.
pub struct TrajectoryWriter<W: Write> {
    csv: csv::Writer<W>,
    path: PathBuf,
    last_time: Option<f64>,
    n_nodes: Option<usize>,
    rows: usize,
}

impl TrajectoryWriter<BufWriter<File>> {
    pub fn create(path: &Path) -> SimResult<Self> {
        let file = File::create(path).map_err(|e| SimError::output(path, e))?;
        Self::new(BufWriter::new(file), path)
    }
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(sink: W, label: &Path) -> SimResult<Self> {
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(sink);
        csv.write_record(TRAJECTORY_COLUMNS).map_err(|e| SimError::output(label, e))?;
        Ok(Self {
            csv,
            path: label.to_path_buf(),
            last_time: None,
            n_nodes: None,
            rows: 0,
        })
    }

    pub fn write(&mut self, rec: &TrajectoryRecord) -> SimResult<()> {
        if let Some(t) = self.last_time {
            if !(rec.time > t) {
                return Err(SimError::output(&self.path, format!("snapshot time {} does not follow {t}", rec.time)));
            }
        }
        match self.n_nodes {
            Some(n) if n != rec.nodes.len() => {
                return Err(SimError::output(
                    &self.path,
                    format!("snapshot has {} nodes, run has {n}", rec.nodes.len()),
                ))
            }
            _ => self.n_nodes = Some(rec.nodes.len()),
        }
        for (name, len) in [
            ("forces", rec.forces.as_ref().map(Vec::len)),
            ("frames", rec.frames.as_ref().map(Vec::len)),
        ] {
            if len.is_some_and(|l| l != rec.nodes.len()) {
                return Err(SimError::output(&self.path, format!("{name} length differs from node count")));
            }
        }
        for (k, x) in rec.nodes.iter().enumerate() {
            let row = Row::new(
                rec.time,
                k,
                x,
                rec.forces.as_ref().map(|f| &f[k]),
                rec.frames.as_ref().map(|d| &d[k]),
            );
            self.csv.serialize(row).map_err(|e| SimError::output(&self.path, e))?;
        }
        self.last_time = Some(rec.time);
        self.rows += rec.nodes.len();
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn finish(mut self) -> SimResult<W> {
        self.csv.flush().map_err(|e| SimError::output(&self.path, e))?;
        self.csv.into_inner().map_err(|e| SimError::output(&self.path, e.error()))
    }
}

/// Inverse of [`TrajectoryWriter`].
pub fn read_trajectory<R: Read>(source: R) -> SimResult<Vec<TrajectoryRecord>> {
    let label = Path::new("<trajectory>");
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers().map_err(|e| SimError::output(label, e))?;
    if header.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(SimError::output(label, format!("unexpected header {header:?}")));
    }
    let mut out: Vec<TrajectoryRecord> = Vec::new();
    let mut pending: Vec<Row> = Vec::new();
    let flush = |rows: &mut Vec<Row>, out: &mut Vec<TrajectoryRecord>| {
        if rows.is_empty() {
            return;
        }
        let forces: Option<Vec<Vec3>> = rows.iter().map(Row::force).collect();
        let frames: Option<Vec<Frame>> = rows.iter().map(Row::frame).collect();
        out.push(TrajectoryRecord {
            time: rows[0].time,
            nodes: rows.iter().map(|r| Vec3::new(r.x, r.y, r.z)).collect(),
            forces,
            frames,
        });
        rows.clear();
    };
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| SimError::output(label, e))?;
        if row.node == 0 {
            flush(&mut pending, &mut out);
        } else if row.node != pending.len() || row.time.to_bits() != pending[0].time.to_bits() {
            return Err(SimError::output(label, format!("row for node {} at t = {} out of order", row.node, row.time)));
        }
        pending.push(row);
    }
    flush(&mut pending, &mut out);
    Ok(out)
}

/// Write serializable rows with a header even when there are none.
pub fn write_table<T: Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> SimResult<()> {
    let file = File::create(path).map_err(|e| SimError::output(path, e))?;
    let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(BufWriter::new(file));
    csv.write_record(columns).map_err(|e| SimError::output(path, e))?;
    for r in rows {
        csv.serialize(r).map_err(|e| SimError::output(path, e))?;
    }
    csv.flush().map_err(|e| SimError::output(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ConfigError,
    BlowUp,
    IllConditioned,
    Failed,
}

impl Status {
    pub fn from_exit_code(code: i32) -> Self {
        match code {
            0 => Self::Ok,
            2 => Self::ConfigError,
            3 => Self::BlowUp,
            4 => Self::IllConditioned,
            _ => Self::Failed,
        }
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub version: String,
    /// Every effective parameter of the run.
    pub parameters: serde_json::Value,
    pub results: serde_json::Value,
    pub files: Vec<String>,
    /// Absent in deterministic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

pub fn write_summary(dir: &Path, summary: &Summary) -> SimResult<PathBuf> {
    let path = dir.join(SUMMARY_FILE);
    let text = serde_json::to_string_pretty(summary).map_err(|e| SimError::output(&path, e))?;
    std::fs::write(&path, text + "\n").map_err(|e| SimError::output(&path, e))?;
    Ok(path)
}
