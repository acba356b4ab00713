//! Scenario construction, configuration, the operator-splitting loop and
//! snapshot files.

pub mod config;
pub mod run;
pub mod scenario;
pub mod snapshot;

pub use config::{ScenarioKind, SimulationConfig, OUTPUT_DIR_ENV};
pub use run::{run, run_with, solve_velocity, SimulationRecord, Snapshot, StepRecord, VelocityState};
pub use scenario::{build_scenario, Scenario};
pub use snapshot::{read_snapshot, write_snapshot, write_vtk};
