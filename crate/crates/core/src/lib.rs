//! Split-circuit steady-state grid analysis.
//!
//! Every device is an equivalent circuit over the real and imaginary parts of
//! its bus voltage. Power flow is solved by Newton-Raphson on the linearized
//! split circuit, and polynomial GLASS device models are fitted to
//! measurement records by least squares.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); file
//! formats and the aliases below use `f64`.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod devices;
pub mod error;
pub mod fitting;
pub mod glass;
pub mod io;
pub mod linalg;
pub mod network;
pub mod phasor;
pub mod scalar;
pub mod solver;

pub use circuit::{solve_linear, Jacobian2, LinearizedStamp, NodeId, SplitSystem};
pub use devices::{Branch, ExpLoad, IMParams, InductionMotor, OnePort, PQLoad, PVBus, SlackSource, ZIPLoad};
pub use error::{Error, Result};
pub use fitting::{
    fit, synthesize, validate, CenterPolicy, FitConfig, FitReport, MeasurementRecord, PhysicsModel, SweepSpec, SynthReport,
    ValidationReport,
};
pub use glass::{Domain, GlassKind, GlassTemplate, MonomialBasis, MAX_ORDER};
pub use network::{Bus, Device, NetworkCase, PowerBase, UnitScale};
pub use phasor::SplitPhasor;
pub use scalar::Scalar;
pub use solver::{solve_power_flow, InitialState, SolveResult, SolveState, SolverOptions};

pub type SplitPhasorF64 = SplitPhasor<f64>;
pub type SplitPhasorF32 = SplitPhasor<f32>;
pub type SplitSystemF64 = SplitSystem<f64>;
pub type SplitSystemF32 = SplitSystem<f32>;
pub type GlassTemplateF64 = GlassTemplate<f64>;
pub type GlassTemplateF32 = GlassTemplate<f32>;
pub type NetworkCaseF64 = NetworkCase<f64>;
pub type NetworkCaseF32 = NetworkCase<f32>;
pub type SolveResultF64 = SolveResult<f64>;
pub type SolveResultF32 = SolveResult<f32>;
pub type SolverOptionsF64 = SolverOptions<f64>;
pub type FitReportF64 = FitReport<f64>;
pub type FitReportF32 = FitReport<f32>;
pub type MeasurementRecordF64 = MeasurementRecord<f64>;
pub type IMParamsF64 = IMParams<f64>;
