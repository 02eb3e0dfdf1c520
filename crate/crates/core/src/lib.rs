//! Positive mathematical programming model of a catch-limited longline fleet.
//!
//! The pipeline calibrates a vessel- and target-specific CES technology from
//! one observed base year, solves the fleet's profit maximization under
//! per-target annual catch limits, and simulates catch-limit policy changes.
//!
//! - [`fleet`]: domain types and CES production mathematics
//! - [`calibrate`]: closed-form base-year calibration and its verification
//! - [`equilibrium`]: catch-limit multipliers and optimal allocations
//! - [`scenarios`]: policy runs, sensitivity sweeps and prediction statistics
//! - [`data`]: file schemas, preprocessing and the synthetic fleet generator

pub mod calibrate;
pub mod data;
pub mod equilibrium;
pub mod error;
pub mod fleet;
pub mod scenarios;

pub use calibrate::{calibrate_fleet, verify_calibration, CalibrationReport};
pub use equilibrium::{solve_equilibrium, EquilibriumSolution};
pub use error::{PmpError, Result};
pub use fleet::{CesParams, FleetModel, GlobalAssumptions, InputId, TargetId, VesselTargetRecord};
