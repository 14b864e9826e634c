//! Serde-facing scenario schema: dimensions, state/Hamiltonian/unitary
//! specifications (literal matrices or named presets), run mode, and the
//! check list. [`resolve`] turns a parsed config into a validated
//! [`ProcessSpec`] plus run instructions.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::ComplexMatrix;
use crate::protocol::ProcessSpec;
use crate::scalar::Scalar;
use crate::scenario::presets;
use crate::state::{make_density, BipartiteState};
use crate::tolerance::{ToleranceProfile, Tolerances};

/// Complex matrix literal: rows of `[re, im]` pairs.
pub type ComplexEntries = Vec<Vec<[f64; 2]>>;

/// Errors raised while parsing or resolving a scenario configuration.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("failed to parse scenario configuration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: String,
        got: String,
    },
    #[error("preset `{preset}` requires {requirement}")]
    PresetRequirement {
        preset: &'static str,
        requirement: String,
    },
    #[error("{what} must be {requirement}, got {got}")]
    BadValue {
        what: &'static str,
        requirement: &'static str,
        got: String,
    },
    #[error("unknown tolerance profile `{0}`; expected `default` or `strict`")]
    UnknownProfile(String),
}

/// Subsystem dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dims {
    pub d_a: usize,
    pub d_b: usize,
    pub d_r: usize,
}

impl Dims {
    pub fn d_ab(self) -> usize {
        self.d_a * self.d_b
    }

    pub fn d_total(self) -> usize {
        self.d_a * self.d_b * self.d_r
    }
}

/// Initial bipartite state: a literal density matrix or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Preset(StatePreset),
    Literal { matrix: ComplexEntries },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum StatePreset {
    /// Maximally entangled two-qubit state; needs 2⊗2.
    Bell,
    /// `|++⟩⟨++| ⊗ |0⟩⟨0|` on 4⊗2: the uniformly superposed input register
    /// of the doubly-controlled-flip scenario.
    SuperposedToffoliInput,
    /// Full-rank product of descending-weight mixtures; any dimensions.
    ProductMixed,
    /// Seeded random state of the given rank on A⊗B.
    Random { seed: u64, rank: usize },
}

/// Reservoir Hamiltonian: a literal diagonal or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Preset(HamiltonianPreset),
    Diagonal { diagonal: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum HamiltonianPreset {
    /// All levels at energy zero (trivial reservoir).
    Zero,
    /// Equally spaced levels `0, step, 2·step, …`.
    Ladder { step: f64 },
}

/// Joint unitary: a literal matrix or a named preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum UnitarySpec {
    Preset(UnitaryPreset),
    Literal { matrix: ComplexEntries },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum UnitaryPreset {
    Identity,
    /// Doubly controlled flip (A = two control qubits, B = target), tensored
    /// with the identity on the reservoir; needs d_a = 4, d_b = 2.
    Toffoli,
    /// Partial swap `cos(angle)·1 + i·sin(angle)·SWAP` between A and R;
    /// needs d_a = d_r.
    #[serde(rename = "swap-ar", alias = "swap_AR")]
    SwapAr {
        angle: f64,
    },
    /// Partial swap between B and R; needs d_b = d_r.
    #[serde(rename = "swap-br", alias = "swap_BR")]
    SwapBr {
        angle: f64,
    },
    /// Seeded Haar-random unitary on the full space.
    Haar {
        seed: u64,
    },
}

/// Exact enumeration or Monte Carlo estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    Exact,
    Sample {
        #[serde(alias = "n")]
        samples: usize,
        seed: u64,
        #[serde(default = "one_worker")]
        workers: usize,
    },
}

fn one_worker() -> usize {
    1
}

/// The named distribution-level checks a run can evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `⟨e^{-σ}⟩ + (off-support reverse mass) = 1`.
    Ift,
    /// Per-trajectory `p̃/p = e^{-σ}` residual.
    Crooks,
    /// `⟨Δs_A⟩ + ⟨Δs_B⟩ - ⟨ΔI⟩ - β⟨Q⟩ ≥ 0`.
    Inequality,
    /// The slack equals the forward/reverse divergence.
    KlIdentity,
    /// Averaged increments match the density-functional changes.
    AverageIdentities,
    /// Forward and reverse distributions each sum to one.
    Normalization,
    /// Erasure bound with the classical information increment `ΔJ`.
    LandauerClassical,
    /// Erasure bound with the eigenbasis information increment `ΔI`.
    LandauerQuantum,
}

impl CheckKind {
    pub const DEFAULT_SET: [CheckKind; 6] = [
        CheckKind::Ift,
        CheckKind::Crooks,
        CheckKind::Inequality,
        CheckKind::KlIdentity,
        CheckKind::AverageIdentities,
        CheckKind::Normalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Ift => "ift",
            CheckKind::Crooks => "crooks",
            CheckKind::Inequality => "inequality",
            CheckKind::KlIdentity => "kl_identity",
            CheckKind::AverageIdentities => "average_identities",
            CheckKind::Normalization => "normalization",
            CheckKind::LandauerClassical => "landauer_classical",
            CheckKind::LandauerQuantum => "landauer_quantum",
        }
    }
}

/// One complete scenario as read from a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dims: Dims,
    pub beta: f64,
    pub initial_state: StateSpec,
    pub reservoir_hamiltonian: HamiltonianSpec,
    pub unitary: UnitarySpec,
    #[serde(default)]
    pub mode: ModeSpec,
    /// Empty means the default check set.
    #[serde(default)]
    pub checks: Vec<CheckKind>,
    /// `default` or `strict`; the `QFLUCT_TOL` environment variable and CLI
    /// flags can override.
    #[serde(default)]
    pub tolerance_profile: Option<String>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario config serializes")
    }

    /// The checks to evaluate: the explicit list, or the default set.
    pub fn effective_checks(&self) -> Vec<CheckKind> {
        if self.checks.is_empty() {
            CheckKind::DEFAULT_SET.to_vec()
        } else {
            self.checks.clone()
        }
    }

    pub fn tolerance_profile(&self) -> Result<ToleranceProfile, ConfigError> {
        match &self.tolerance_profile {
            None => Ok(ToleranceProfile::Default),
            Some(text) => ToleranceProfile::parse(text)
                .ok_or_else(|| ConfigError::UnknownProfile(text.clone())),
        }
    }
}

/// A config with every preset expanded into explicit numbers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedEcho {
    pub dims: Dims,
    pub beta: f64,
    pub initial_state: ComplexEntries,
    pub reservoir_energies: Vec<f64>,
    pub unitary: ComplexEntries,
}

/// A validated scenario ready to run.
pub struct ResolvedScenario<T> {
    pub spec: ProcessSpec<T>,
    pub mode: ModeSpec,
    pub checks: Vec<CheckKind>,
    pub profile: ToleranceProfile,
    pub echo: ResolvedEcho,
}

pub fn matrix_from_entries<T: Scalar>(
    entries: &ComplexEntries,
    what: &'static str,
) -> Result<ComplexMatrix<T>, ConfigError> {
    let rows = entries.len();
    let cols = entries.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || entries.iter().any(|row| row.len() != cols) {
        return Err(ConfigError::BadValue {
            what,
            requirement: "a non-empty rectangular matrix literal",
            got: format!("{rows} rows"),
        });
    }
    let mut m = ComplexMatrix::zeros(rows, cols);
    for (i, row) in entries.iter().enumerate() {
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = Complex::new(T::cst(re), T::cst(im));
        }
    }
    Ok(m)
}

pub fn entries_from_matrix<T: Scalar>(m: &ComplexMatrix<T>) -> ComplexEntries {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| [m[(i, j)].re.as_f64(), m[(i, j)].im.as_f64()])
                .collect()
        })
        .collect()
}

fn check_square<T: Scalar>(
    m: &ComplexMatrix<T>,
    expected: usize,
    what: &'static str,
) -> Result<(), ConfigError> {
    if m.rows() != expected || m.cols() != expected {
        return Err(ConfigError::Dimension {
            what,
            expected: format!("{expected}×{expected}"),
            got: format!("{}×{}", m.rows(), m.cols()),
        });
    }
    Ok(())
}

fn resolve_state<T: Scalar>(
    spec: &StateSpec,
    dims: Dims,
    tol: &Tolerances<T>,
) -> Result<BipartiteState<T>, ConfigError>
where
    StandardNormal: Distribution<T>,
{
    let matrix = match spec {
        StateSpec::Literal { matrix } => {
            let m = matrix_from_entries::<T>(matrix, "initial_state.matrix")?;
            check_square(&m, dims.d_ab(), "initial_state.matrix")?;
            m
        }
        StateSpec::Preset(preset) => match *preset {
            StatePreset::Bell => {
                if (dims.d_a, dims.d_b) != (2, 2) {
                    return Err(ConfigError::PresetRequirement {
                        preset: "bell",
                        requirement: format!("d_a = 2 and d_b = 2, got {}⊗{}", dims.d_a, dims.d_b),
                    });
                }
                presets::bell_matrix()
            }
            StatePreset::SuperposedToffoliInput => {
                if (dims.d_a, dims.d_b) != (4, 2) {
                    return Err(ConfigError::PresetRequirement {
                        preset: "superposed-toffoli-input",
                        requirement: format!("d_a = 4 and d_b = 2, got {}⊗{}", dims.d_a, dims.d_b),
                    });
                }
                presets::superposed_toffoli_input_matrix()
            }
            StatePreset::ProductMixed => presets::product_mixed_matrix(dims.d_a, dims.d_b),
            StatePreset::Random { seed, rank } => {
                if rank == 0 || rank > dims.d_ab() {
                    return Err(ConfigError::PresetRequirement {
                        preset: "random",
                        requirement: format!("1 ≤ rank ≤ {}, got {rank}", dims.d_ab()),
                    });
                }
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                presets::random_state_matrix(dims.d_ab(), rank, &mut rng)
            }
        },
    };
    let joint = make_density(matrix, tol).map_err(|e| ConfigError::BadValue {
        what: "initial_state",
        requirement: "a valid density matrix",
        got: e.to_string(),
    })?;
    BipartiteState::new(dims.d_a, dims.d_b, joint, tol).map_err(|e| ConfigError::BadValue {
        what: "initial_state",
        requirement: "consistent with dims",
        got: e.to_string(),
    })
}

fn resolve_hamiltonian<T: Scalar>(
    spec: &HamiltonianSpec,
    dims: Dims,
) -> Result<ComplexMatrix<T>, ConfigError> {
    let diagonal: Vec<f64> = match spec {
        HamiltonianSpec::Diagonal { diagonal } => {
            if diagonal.iter().any(|e| !e.is_finite()) {
                return Err(ConfigError::BadValue {
                    what: "reservoir_hamiltonian.diagonal",
                    requirement: "finite energies",
                    got: format!("{diagonal:?}"),
                });
            }
            diagonal.clone()
        }
        HamiltonianSpec::Preset(HamiltonianPreset::Zero) => vec![0.0; dims.d_r],
        HamiltonianSpec::Preset(HamiltonianPreset::Ladder { step }) => {
            if !step.is_finite() {
                return Err(ConfigError::BadValue {
                    what: "reservoir_hamiltonian.step",
                    requirement: "finite",
                    got: format!("{step}"),
                });
            }
            (0..dims.d_r).map(|i| i as f64 * step).collect()
        }
    };
    if diagonal.len() != dims.d_r {
        return Err(ConfigError::Dimension {
            what: "reservoir_hamiltonian",
            expected: format!("{} levels", dims.d_r),
            got: format!("{}", diagonal.len()),
        });
    }
    let cast: Vec<T> = diagonal.iter().map(|&e| T::cst(e)).collect();
    Ok(ComplexMatrix::from_real_diagonal(&cast))
}

fn resolve_unitary<T: Scalar>(
    spec: &UnitarySpec,
    dims: Dims,
) -> Result<ComplexMatrix<T>, ConfigError>
where
    StandardNormal: Distribution<T>,
{
    match spec {
        UnitarySpec::Literal { matrix } => {
            let m = matrix_from_entries::<T>(matrix, "unitary.matrix")?;
            check_square(&m, dims.d_total(), "unitary.matrix")?;
            Ok(m)
        }
        UnitarySpec::Preset(preset) => match *preset {
            UnitaryPreset::Identity => Ok(ComplexMatrix::identity(dims.d_total())),
            UnitaryPreset::Toffoli => {
                if (dims.d_a, dims.d_b) != (4, 2) {
                    return Err(ConfigError::PresetRequirement {
                        preset: "toffoli",
                        requirement: format!("d_a = 4 and d_b = 2, got {}⊗{}", dims.d_a, dims.d_b),
                    });
                }
                Ok(presets::toffoli_unitary(dims.d_r))
            }
            UnitaryPreset::SwapAr { angle } => {
                if dims.d_a != dims.d_r {
                    return Err(ConfigError::PresetRequirement {
                        preset: "swap-ar",
                        requirement: format!("d_a = d_r, got {} and {}", dims.d_a, dims.d_r),
                    });
                }
                Ok(presets::partial_swap_ar(dims.d_a, dims.d_b, T::cst(angle)))
            }
            UnitaryPreset::SwapBr { angle } => {
                if dims.d_b != dims.d_r {
                    return Err(ConfigError::PresetRequirement {
                        preset: "swap-br",
                        requirement: format!("d_b = d_r, got {} and {}", dims.d_b, dims.d_r),
                    });
                }
                Ok(presets::partial_swap_br(dims.d_a, dims.d_b, T::cst(angle)))
            }
            UnitaryPreset::Haar { seed } => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                Ok(presets::haar_unitary(dims.d_total(), &mut rng))
            }
        },
    }
}

/// Validates a parsed configuration and expands presets into a runnable
/// process specification.
pub fn resolve<T: Scalar>(config: &ScenarioConfig) -> Result<ResolvedScenario<T>, ConfigError>
where
    StandardNormal: Distribution<T>,
{
    let dims = config.dims;
    if dims.d_a == 0 || dims.d_b == 0 || dims.d_r == 0 {
        return Err(ConfigError::BadValue {
            what: "dims",
            requirement: "all dimensions at least 1",
            got: format!("{}⊗{}⊗{}", dims.d_a, dims.d_b, dims.d_r),
        });
    }
    if !config.beta.is_finite() || config.beta < 0.0 {
        return Err(ConfigError::BadValue {
            what: "beta",
            requirement: "finite and nonnegative",
            got: format!("{}", config.beta),
        });
    }
    if let ModeSpec::Sample {
        samples, workers, ..
    } = config.mode
    {
        if samples < 2 {
            return Err(ConfigError::BadValue {
                what: "mode.sample.samples",
                requirement: "at least 2",
                got: format!("{samples}"),
            });
        }
        if workers == 0 {
            return Err(ConfigError::BadValue {
                what: "mode.sample.workers",
                requirement: "at least 1",
                got: "0".into(),
            });
        }
    }
    let profile = config.tolerance_profile()?;
    let tol = Tolerances::<T>::profile(profile);

    let state = resolve_state(&config.initial_state, dims, &tol)?;
    let hamiltonian = resolve_hamiltonian::<T>(&config.reservoir_hamiltonian, dims)?;
    let unitary = resolve_unitary::<T>(&config.unitary, dims)?;

    let echo = ResolvedEcho {
        dims,
        beta: config.beta,
        initial_state: entries_from_matrix(state.joint().matrix()),
        reservoir_energies: (0..dims.d_r)
            .map(|i| hamiltonian[(i, i)].re.as_f64())
            .collect(),
        unitary: entries_from_matrix(&unitary),
    };
    let spec =
        ProcessSpec::new(state, hamiltonian, T::cst(config.beta), unitary, tol).map_err(|e| {
            ConfigError::BadValue {
                what: "scenario",
                requirement: "a consistent process specification",
                got: e.to_string(),
            }
        })?;
    Ok(ResolvedScenario {
        spec,
        mode: config.mode,
        checks: config.effective_checks(),
        profile,
        echo,
    })
}
