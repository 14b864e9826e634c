//! Configuration ingestion, named presets, end-to-end scenario runs, and
//! randomized invariant sweeps.

pub mod config;
pub mod presets;
pub mod run;
pub mod sweep;

pub use config::{
    resolve, CheckKind, ComplexEntries, ConfigError, Dims, HamiltonianPreset, HamiltonianSpec,
    ModeSpec, ResolvedEcho, ResolvedScenario, ScenarioConfig, StatePreset, StateSpec,
    UnitaryPreset, UnitarySpec,
};
pub use run::{
    evaluate_checks, run_scenario, run_scenario_detailed, write_trajectory_csv, CheckOutcome,
    RunReport, ScenarioError, ScenarioOutput,
};
pub use sweep::{sweep, SweepConfig, SweepReport, SweepRow, SweepSummary};
