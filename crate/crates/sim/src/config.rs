//! Run configuration.
//!
//! A config file is a JSON object whose keys are all optional; missing
//! values take the published defaults for the chosen experiment. Command
//! line flags override file values. [`ExperimentConfig::plan`] resolves the
//! merged config into a fully specified, validated [`Plan`].

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use segstokes_core::exec::Execution;
use segstokes_core::mobility::Method;
use segstokes_core::planar::Integrator;
use serde::{Deserialize, Serialize};

use crate::error::{SimError, SimResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Leak,
    Drag,
    SwimPlanar,
    SwimWall,
    SwimRod,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Leak => "leak",
            Self::Drag => "drag",
            Self::SwimPlanar => "swim-planar",
            Self::SwimWall => "swim-wall",
            Self::SwimRod => "swim-rod",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Segments,
    Mrs,
}

impl From<MethodChoice> for Method {
    fn from(m: MethodChoice) -> Self {
        match m {
            MethodChoice::Segments => Method::Segments,
            MethodChoice::Mrs => Method::Mrs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorChoice {
    Euler,
    Rk2,
}

impl From<IntegratorChoice> for Integrator {
    fn from(i: IntegratorChoice) -> Self {
        match i {
            IntegratorChoice::Euler => Integrator::Euler,
            IntegratorChoice::Rk2 => Integrator::Rk2,
        }
    }
}

/// Curvature offsets `W1`, `W2` applied to the rod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Turning {
    /// Planar beat, `W1 = W2 = 0`.
    None,
    /// Uniform draws in `[-Omega0, Omega0]` every 15 beats.
    Random,
    /// Constant offsets (nondimensional).
    Fixed { w1: f64, w2: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_over_h: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checks_per_segment: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DragSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanarSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bending: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensile: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSection {
    /// Initial height of the beat plane above `z = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<f64>,
    /// Points per side of the square sampling grid on `z = 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodSection {
    /// `a`, in g um^3 s^-2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bend: Option<f64>,
    /// `b`, in g um s^-2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<f64>,
    /// um.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// um^-1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    /// s^-1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
    /// um.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// g um^-1 s^-1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turning: Option<Turning>,
}

/// Everything a run can be told. All keys optional, unknown keys rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodChoice>,
    /// `N_n` for leak/drag, `M` or `N` for the swimmers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshots_per_beat: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub viscosity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak: Option<LeakSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drag: Option<DragSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rod: Option<RodSection>,
}

pub const DEFAULT_SEED: u64 = 20_100_101;
pub const DEFAULT_SNAPSHOTS_PER_BEAT: u64 = 100;
pub const DEFAULT_MAX_SPEED: f64 = 1e4;
pub const LEAK_NODES: [usize; 3] = [48, 72, 96];
pub const LEAK_EPS_OVER_H: [f64; 17] = [
    0.2, 0.25, 0.282, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0,
];
pub const LEAK_CHECKS_PER_SEGMENT: usize = 32;

/// Twelve log-spaced values on `[0.002, 0.04]`.
pub fn default_drag_eps() -> Vec<f64> {
    (0..12).map(|i| 0.002 * 20f64.powf(i as f64 / 11.0)).collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> SimResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> SimResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::ConfigFile {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Fields set in `over` replace those in `self`; sections merge key by key.
    pub fn overlay(mut self, over: ExperimentConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(experiment, method, nodes, eps, dt, t_final, seed, out, deterministic, integrator, snapshots_per_beat, max_speed, viscosity);
        macro_rules! section {
            ($s:ident { $($f:ident),* }) => {
                if let Some(o) = over.$s {
                    let mut base = self.$s.take().unwrap_or_default();
                    $( if o.$f.is_some() { base.$f = o.$f; } )*
                    self.$s = Some(base);
                }
            };
        }
        section!(leak { nodes, eps_over_h, checks_per_segment });
        section!(drag { eps });
        section!(planar { bending, tensile, amplitude, wavenumber, frequency, length, offset });
        section!(wall { height, grid });
        section!(rod { bend, shear, amplitude, wavenumber, frequency, length, viscosity, turning });
        self
    }

    /// Resolve defaults for `experiment` and validate.
    pub fn plan(&self, experiment: Experiment) -> SimResult<Plan> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(SimError::Config(format!(
                    "config is for experiment {} but {} was requested",
                    e.name(),
                    experiment.name()
                )));
            }
        }
        let common = Common {
            experiment,
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            deterministic: self.deterministic.unwrap_or(false),
            viscosity: positive("viscosity", self.viscosity.unwrap_or(1.0))?,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("runs").join(experiment.name())),
        };
        let plan = match experiment {
            Experiment::Leak => Plan::Leak(self.leak_plan(common)?),
            Experiment::Drag => Plan::Drag(self.drag_plan(common)?),
            _ => Plan::Swim(self.swim_plan(common)?),
        };
        Ok(plan)
    }

    fn leak_plan(&self, common: Common) -> SimResult<LeakPlan> {
        let section = self.leak.clone().unwrap_or_default();
        let nodes = match (self.nodes, section.nodes) {
            (Some(n), _) => vec![n],
            (None, Some(v)) => v,
            (None, None) => LEAK_NODES.to_vec(),
        };
        if nodes.is_empty() || nodes.iter().any(|&n| n < 2) {
            return Err(SimError::Config(format!("leak nodes must each be at least 2, got {nodes:?}")));
        }
        let eps_over_h = section.eps_over_h.unwrap_or_else(|| LEAK_EPS_OVER_H.to_vec());
        if eps_over_h.is_empty() {
            return Err(SimError::Config("leak eps_over_h grid is empty".into()));
        }
        for &r in &eps_over_h {
            positive("leak eps_over_h", r)?;
        }
        if let Some(e) = self.eps {
            positive("eps", e)?;
        }
        let methods = match self.method {
            Some(m) => vec![m],
            None => vec![MethodChoice::Segments, MethodChoice::Mrs],
        };
        let checks = section.checks_per_segment.unwrap_or(LEAK_CHECKS_PER_SEGMENT);
        if checks == 0 {
            return Err(SimError::Config("checks_per_segment must be positive".into()));
        }
        Ok(LeakPlan {
            common,
            methods,
            nodes,
            eps_over_h,
            eps: self.eps,
            checks_per_segment: checks,
            length: 1.0,
        })
    }

    fn drag_plan(&self, common: Common) -> SimResult<DragPlan> {
        let nodes = self.nodes.unwrap_or(48);
        if nodes < 2 {
            return Err(SimError::Config(format!("drag needs at least 2 nodes, got {nodes}")));
        }
        let eps = match (self.eps, self.drag.as_ref().and_then(|d| d.eps.clone())) {
            (Some(e), _) => vec![e],
            (None, Some(v)) => v,
            (None, None) => default_drag_eps(),
        };
        if eps.is_empty() {
            return Err(SimError::Config("drag eps grid is empty".into()));
        }
        for &e in &eps {
            positive("drag eps", e)?;
            if e >= 0.5 {
                return Err(SimError::Config(format!("drag eps {e} is not slender (must be < 0.5)")));
            }
        }
        Ok(DragPlan {
            common,
            method: self.method.unwrap_or(MethodChoice::Segments),
            nodes,
            eps,
            length: 1.0,
        })
    }

    fn swim_plan(&self, common: Common) -> SimResult<SwimPlan> {
        if self.method == Some(MethodChoice::Mrs) {
            return Err(SimError::Config("swimmers are driven by segments only; --method mrs applies to leak and drag".into()));
        }
        let experiment = common.experiment;
        let (model, nodes, eps, dt, t_final, integrator) = match experiment {
            Experiment::SwimPlanar => (Model::Planar, 24, 1.0 / 300.0, 2.5e-7, 70.0, IntegratorChoice::Euler),
            Experiment::SwimWall => (Model::Wall, 12, 0.004, 2.5e-7, 70.0, IntegratorChoice::Euler),
            Experiment::SwimRod => (Model::Rod, 20, 0.005, 5e-6, 30.0, IntegratorChoice::Euler),
            _ => unreachable!("not a swimming experiment"),
        };
        let nodes = self.nodes.unwrap_or(nodes);
        if nodes < 3 {
            return Err(SimError::Config(format!("swimmers need at least 3 nodes, got {nodes}")));
        }
        let planar = match model {
            Model::Rod => {
                if self.planar.is_some() || self.wall.is_some() {
                    return Err(SimError::Config("planar and wall sections do not apply to swim-rod".into()));
                }
                None
            }
            _ => {
                if self.rod.is_some() {
                    return Err(SimError::Config("the rod section applies to swim-rod only".into()));
                }
                if model == Model::Planar && self.wall.is_some() {
                    return Err(SimError::Config("the wall section applies to swim-wall only".into()));
                }
                Some(self.planar_params(model)?)
            }
        };
        let wall = match model {
            Model::Wall => {
                let w = self.wall.clone().unwrap_or_default();
                let grid = w.grid.unwrap_or(11);
                if grid < 2 {
                    return Err(SimError::Config(format!("wall grid needs at least 2 points per side, got {grid}")));
                }
                Some(WallParams {
                    height: positive("wall height", w.height.unwrap_or(0.1))?,
                    grid,
                })
            }
            _ => None,
        };
        let rod = match model {
            Model::Rod => Some(self.rod_params()?),
            _ => None,
        };
        let plan = SwimPlan {
            common,
            model,
            nodes,
            eps: positive("eps", self.eps.unwrap_or(eps))?,
            dt: positive("dt", self.dt.unwrap_or(dt))?,
            t_final: positive("t_final", self.t_final.unwrap_or(t_final))?,
            integrator: self.integrator.unwrap_or(integrator),
            snapshots_per_beat: self.snapshots_per_beat.unwrap_or(DEFAULT_SNAPSHOTS_PER_BEAT),
            max_speed: positive("max_speed", self.max_speed.unwrap_or(DEFAULT_MAX_SPEED))?,
            planar,
            wall,
            rod,
        };
        if plan.snapshots_per_beat == 0 {
            return Err(SimError::Config("snapshots_per_beat must be positive".into()));
        }
        if let Some(p) = &plan.planar {
            if p.amplitude * p.wavenumber >= 1.0 {
                return Err(SimError::Config(format!(
                    "amplitude * wavenumber = {} must be below 1",
                    p.amplitude * p.wavenumber
                )));
            }
        }
        if plan.dt > plan.t_final {
            return Err(SimError::Config(format!("dt {} exceeds t_final {}", plan.dt, plan.t_final)));
        }
        Ok(plan)
    }

    fn planar_params(&self, model: Model) -> SimResult<PlanarParams> {
        let p = self.planar.clone().unwrap_or_default();
        let offset = p.offset.unwrap_or(if model == Model::Wall { 0.6 } else { 0.0 });
        if !offset.is_finite() {
            return Err(SimError::Config(format!("offset must be finite, got {offset}")));
        }
        Ok(PlanarParams {
            bending: positive("bending", p.bending.unwrap_or(0.0221))?,
            tensile: positive("tensile", p.tensile.unwrap_or(2.95))?,
            amplitude: non_negative("amplitude", p.amplitude.unwrap_or(0.075))?,
            wavenumber: positive("wavenumber", p.wavenumber.unwrap_or(9.0 * PI / 4.0))?,
            frequency: positive("frequency", p.frequency.unwrap_or(2.0 * PI))?,
            length: positive("length", p.length.unwrap_or(1.0))?,
            offset,
        })
    }

    fn rod_params(&self) -> SimResult<RodPlan> {
        let r = self.rod.clone().unwrap_or_default();
        let wavenumber = positive("rod wavenumber", r.wavenumber.unwrap_or(9.0 * PI / 160.0))?;
        let amplitude = non_negative("rod amplitude", r.amplitude.unwrap_or(3.5))?;
        Ok(RodPlan {
            bend: positive("rod bend", r.bend.unwrap_or(4.9587))?,
            shear: positive("rod shear", r.shear.unwrap_or(0.8264))?,
            amplitude,
            wavenumber,
            frequency: positive("rod frequency", r.frequency.unwrap_or(550.0))?,
            length: positive("rod length", r.length.unwrap_or(40.0))?,
            viscosity: positive("rod viscosity", r.viscosity.unwrap_or(1e-6))?,
            turning: r.turning.unwrap_or(Turning::Random),
            turning_amplitude: 0.4 * amplitude * wavenumber * wavenumber,
        })
    }
}

fn positive(name: &str, v: f64) -> SimResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(SimError::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

fn non_negative(name: &str, v: f64) -> SimResult<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(SimError::Config(format!("{name} must be non-negative and finite, got {v}")))
    }
}

/// Settings every experiment shares.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Common {
    pub experiment: Experiment,
    pub seed: u64,
    pub deterministic: bool,
    pub viscosity: f64,
    pub out: PathBuf,
}

impl Common {
    /// Deterministic runs take the sequential path.
    pub fn execution(&self) -> Execution {
        if self.deterministic {
            Execution::Sequential
        } else {
            Execution::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakPlan {
    #[serde(flatten)]
    pub common: Common,
    pub methods: Vec<MethodChoice>,
    pub nodes: Vec<usize>,
    pub eps_over_h: Vec<f64>,
    /// A single absolute `eps` replacing the `eps_over_h` grid.
    pub eps: Option<f64>,
    pub checks_per_segment: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragPlan {
    #[serde(flatten)]
    pub common: Common,
    pub method: MethodChoice,
    pub nodes: usize,
    pub eps: Vec<f64>,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Planar,
    Wall,
    Rod,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarParams {
    pub bending: f64,
    pub tensile: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub frequency: f64,
    pub length: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallParams {
    pub height: f64,
    pub grid: usize,
}

/// Dimensional rod inputs; the run itself is nondimensional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RodPlan {
    pub bend: f64,
    pub shear: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    pub frequency: f64,
    pub length: f64,
    pub viscosity: f64,
    pub turning: Turning,
    /// `Omega0 = 0.4 A k^2`, per um.
    pub turning_amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwimPlan {
    #[serde(flatten)]
    pub common: Common,
    pub model: Model,
    pub nodes: usize,
    pub eps: f64,
    pub dt: f64,
    pub t_final: f64,
    pub integrator: IntegratorChoice,
    pub snapshots_per_beat: u64,
    pub max_speed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planar: Option<PlanarParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rod: Option<RodPlan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Plan {
    Leak(LeakPlan),
    Drag(DragPlan),
    Swim(SwimPlan),
}

impl Plan {
    pub fn common(&self) -> &Common {
        match self {
            Plan::Leak(p) => &p.common,
            Plan::Drag(p) => &p.common,
            Plan::Swim(p) => &p.common,
        }
    }
}
