//! Simulation engine and benchmark library for indicator-function QAOA on
//! inequality-constrained binary problems.
//!
//! The crate brute-forces every diagonal quantity of an instance once
//! ([`diagonals`]), evolves statevectors with pointwise cost layers
//! ([`engine`]), approximates the constraint indicator with a limited
//! phase-estimation register ([`theta`]), validates both against a literal
//! gate-level circuit ([`oracle`]), and wraps the classical optimization
//! loop and figures of merit ([`optimize`], [`metrics`], [`protocol`]).

pub mod diagonals;
pub mod engine;
pub mod error;
pub mod fft;
pub mod instances;
pub mod lbfgs;
pub mod metrics;
pub mod optimize;
pub mod oracle;
pub mod protocol;
pub mod rng;
pub mod theta;

pub use diagonals::{DiagonalTables, Method, SlackEncoding, TableOptions};
pub use engine::{EvolveMode, QaoaParams, QaoaState};
pub use error::{Error, Result};
pub use instances::{ConstrainedProblem, KnapsackInstance, Kind, LinearConstraint};
pub use metrics::{ClopsMethod, ResourceModel, RunRecord};
pub use optimize::{DepthSchedule, LinearSchedule, RunSetup, SequentialOutcome};
pub use protocol::{PreparedRun, RunConfig};
pub use theta::ThetaTable;
