use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{Experiment, ExperimentConfig, MethodChoice, Plan};
use crate::error::SimResult;

#[derive(Debug, Parser)]
#[command(name = "segstokes", version, about = "Regularized Stokeslet segment experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Boundary-velocity leak of a translating straight filament, both methods.
    Leak(Flags),
    /// Transverse drag on a straight filament and the fitted effective radius.
    Drag(Flags),
    /// Planar flagellum in free space.
    SwimPlanar(Flags),
    /// Planar flagellum above a no-slip wall at z = 0.
    SwimWall(Flags),
    /// Kirchhoff rod flagellum with random turning.
    SwimRod(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Node count (N_n, M or N).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodChoice>,
    /// Sequential execution and no wall-clock fields in the summary.
    #[arg(long)]
    pub deterministic: bool,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Command {
    pub fn split(self) -> (Experiment, Flags) {
        match self {
            Command::Leak(f) => (Experiment::Leak, f),
            Command::Drag(f) => (Experiment::Drag, f),
            Command::SwimPlanar(f) => (Experiment::SwimPlanar, f),
            Command::SwimWall(f) => (Experiment::SwimWall, f),
            Command::SwimRod(f) => (Experiment::SwimRod, f),
        }
    }
}

impl Flags {
    pub fn overrides(&self) -> ExperimentConfig {
        ExperimentConfig {
            eps: self.eps,
            nodes: self.nodes,
            dt: self.dt,
            t_final: self.t_final,
            seed: self.seed,
            method: self.method,
            deterministic: self.deterministic.then_some(true),
            out: self.out.clone(),
            ..Default::default()
        }
    }
}

/// Merge config file and flags, then resolve the plan.
pub fn resolve(experiment: Experiment, flags: &Flags) -> SimResult<Plan> {
    let base = match &flags.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    base.overlay(flags.overrides()).plan(experiment)
}
