//! Modelling, control and evaluation kernels for a millimetre-scale
//! single-tail swimmer driven by a pair of PWM-excited actuators.
//!
//! * [`planform`]: plate geometry and resistive drag factors.
//! * [`actuator`]: PWM excitation, power fit and the excursion table.
//! * [`hydro`]: quadratic drag torques and the head/tail cycle.
//! * [`plant`]: calibrated swimming surrogate and planar kinematics.
//! * [`control`]: lateral, heading and duty-cycle mapping loops.
//! * [`metrics`]: CoT, St, Re, Sw and trajectory statistics.
//! * [`harness`]: sweeps, tracking runs and run directories.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod control;
pub mod error;
pub mod harness;
pub mod hydro;
pub mod interp;
pub mod metrics;
pub mod planform;
pub mod plant;
pub mod quadrature;

pub use actuator::{ActuationMode, ExcitationCommand, ExcursionTable, Provenance};
pub use control::{ControlConfig, ControllerState, PathKind, ReferencePath};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentKind, RunManifest};
pub use hydro::{simulate_cycle, CycleSetup, CycleSummary, FluidEnv, PlateMotion};
pub use metrics::{Summary, SwimmerSpec, TrajectoryLog, TrajectoryStats};
pub use planform::{ChordProfile, PlateLabel, Planform, RdfReport};
pub use plant::{Kinematics, PlantCalibration, Side, SwimmerState};
pub use quadrature::QuadratureSpec;
