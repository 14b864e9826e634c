//! Numerical verification of fluctuation relations for bipartite quantum
//! systems coupled to a finite thermal reservoir.
//!
//! The library builds the forward and reverse trajectory distributions of a
//! two-point measurement protocol — eigenbasis measurements of a bipartite
//! state and of a thermal reservoir before and after a joint unitary — and
//! checks the identities and inequalities those distributions must satisfy:
//! the exponential average `⟨e^{-σ}⟩`, the detailed forward/reverse ratio,
//! the entropy-production inequality, and erasure bounds.
//!
//! Everything is generic over the real scalar type via [`scalar::Scalar`]
//! (`f32` or `f64`); concrete `f64` aliases sit at the crate root.

pub mod fluctuation;
pub mod linalg;
pub mod protocol;
pub mod sampler;
pub mod scalar;
pub mod scenario;
pub mod state;
pub mod tolerance;

pub use fluctuation::{
    analyze, analyze_process, increments, inequality_slack, landauer_check, EnsembleReport,
    FluctuationError, InformationKind, ReportMode, StochasticIncrements,
};
pub use linalg::{ComplexMatrix, LinalgError, SpectralDecomposition};
pub use protocol::{
    evolve, evolve_with_rotated_eigenbases, forward_distribution, MeasurementFrame, ProcessSpec,
    ProtocolError, SupportFilter, Time, Trajectory, TrajectoryEnsemble, TrajectoryIndices,
};
pub use sampler::{
    estimate, sample_summary, sampled_report, Quantity, SampleEstimate, SampledSummary,
    TrajectorySampler,
};
pub use scalar::Scalar;
pub use scenario::{
    run_scenario, run_scenario_detailed, sweep, CheckKind, CheckOutcome, RunReport, ScenarioConfig,
    ScenarioError, SweepConfig, SweepReport,
};
pub use state::{
    make_density, quantum_mutual_information, random_density, random_unitary, thermal_state,
    von_neumann_entropy, BipartiteState, DensityOperator, StateError, ThermalState,
};
pub use tolerance::{ToleranceProfile, Tolerances};

/// `f64` aliases for the main types.
pub type ComplexMatrix64 = ComplexMatrix<f64>;
pub type SpectralDecomposition64 = SpectralDecomposition<f64>;
pub type DensityOperator64 = DensityOperator<f64>;
pub type BipartiteState64 = BipartiteState<f64>;
pub type ThermalState64 = ThermalState<f64>;
pub type ProcessSpec64 = ProcessSpec<f64>;
pub type MeasurementFrame64 = MeasurementFrame<f64>;
pub type TrajectoryEnsemble64 = TrajectoryEnsemble<f64>;
pub type EnsembleReport64 = EnsembleReport<f64>;
pub type Tolerances64 = Tolerances<f64>;
