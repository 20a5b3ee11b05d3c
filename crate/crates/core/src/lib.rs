//! Regularized Stokeslet segments.
//!
//! Exact line integrals of regularized Stokes-flow kernels over straight
//! segments carrying linearly varying densities, the point-force baseline,
//! a plane-wall image system, velocity-constraint force solves, and two
//! flagellum models driven by these kernels.

pub mod error;
pub mod exec;
pub mod integrals;
pub mod kernels;
pub mod mobility;
pub mod planar;
mod poly;
pub mod rod;
pub mod segment;
pub mod wall;

pub use error::{Error, Result};
pub use integrals::{IndexSet, Segment, SegmentGeometry, StokesletIntegrals, TnqTable};
pub use kernels::{DipoleVariant, FluidParam, PressureKind, RegParam, Vec3};
pub use segment::{LoadKind, SegmentLoad};
