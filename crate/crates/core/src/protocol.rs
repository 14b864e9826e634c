//! The two-point measurement protocol: a bipartite system AB prepared in an
//! arbitrary state, a reservoir R prepared thermally, eigenbasis measurements
//! at both ends, and a joint unitary in between.
//!
//! A trajectory is the tuple of outcomes `(m, a, b, r) → (m', a', b', r')`:
//! joint AB eigenbasis, the two local eigenbases, and the reservoir basis, at
//! the initial and final time. The forward weight of a trajectory factorizes
//! into eigenvalue probabilities, squared eigenbasis overlaps, and the squared
//! unitary kernel; the reverse weight reuses the same kernel and overlaps with
//! the final-state and fresh-thermal eigenvalue probabilities. Everything here
//! is exact table bookkeeping — no sampling, no approximation beyond floating
//! point.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{ComplexMatrix, LinalgError, Part};
use crate::scalar::Scalar;
use crate::state::{make_density, thermal_state, BipartiteState, StateError, ThermalState};
use crate::tolerance::Tolerances;

/// Errors from protocol construction and evolution.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("unitary deviates from U†U = I by {deviation:e} (allowed {allowed:e})")]
    NotUnitary { deviation: f64, allowed: f64 },
    #[error("unitary is {got}-dimensional, expected d_A*d_B*d_R = {expected}")]
    UnitaryDimension { got: usize, expected: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Validated inputs of one protocol run.
#[derive(Debug, Clone)]
pub struct ProcessSpec<T> {
    initial: BipartiteState<T>,
    reservoir_hamiltonian: ComplexMatrix<T>,
    beta: T,
    unitary: ComplexMatrix<T>,
    tolerances: Tolerances<T>,
}

impl<T: Scalar> ProcessSpec<T> {
    pub fn new(
        initial: BipartiteState<T>,
        reservoir_hamiltonian: ComplexMatrix<T>,
        beta: T,
        unitary: ComplexMatrix<T>,
        tolerances: Tolerances<T>,
    ) -> Result<Self, ProtocolError> {
        // Thermal construction validates the Hamiltonian and beta.
        let reservoir = thermal_state(&reservoir_hamiltonian, beta, &tolerances)?;
        let expected = initial.joint().dim() * reservoir.dim();
        let got = unitary.dim()?;
        if got != expected {
            return Err(ProtocolError::UnitaryDimension { got, expected });
        }
        let deviation = unitary.unitarity_deviation();
        if deviation > tolerances.unitarity {
            return Err(ProtocolError::NotUnitary {
                deviation: deviation.as_f64(),
                allowed: tolerances.unitarity.as_f64(),
            });
        }
        Ok(Self {
            initial,
            reservoir_hamiltonian,
            beta,
            unitary,
            tolerances,
        })
    }

    pub fn d_a(&self) -> usize {
        self.initial.d_a()
    }

    pub fn d_b(&self) -> usize {
        self.initial.d_b()
    }

    pub fn d_r(&self) -> usize {
        self.reservoir_hamiltonian.rows()
    }

    pub fn d_ab(&self) -> usize {
        self.d_a() * self.d_b()
    }

    pub fn d_total(&self) -> usize {
        self.d_ab() * self.d_r()
    }

    pub fn initial(&self) -> &BipartiteState<T> {
        &self.initial
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn unitary(&self) -> &ComplexMatrix<T> {
        &self.unitary
    }

    pub fn reservoir_hamiltonian(&self) -> &ComplexMatrix<T> {
        &self.reservoir_hamiltonian
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tolerances
    }
}

/// Which end of the protocol a table refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Time {
    Initial,
    Final,
}

/// Joint + marginal spectra and the measurement tables of one protocol end.
#[derive(Debug, Clone)]
pub struct EndpointTables<T> {
    /// Joint state with its two marginals, all canonically decomposed.
    pub state: BipartiteState<T>,
    /// `|⟨m | a, b⟩|²` with layout `m * (d_a*d_b) + (a*d_b + b)`.
    pub overlap: Vec<T>,
    /// `⟨a, b | ρ_AB | a, b⟩` with layout `a*d_b + b` (local-eigenbasis
    /// diagonal of the joint state; the classical joint outcome weights).
    pub joint_outcome: Vec<T>,
}

/// All probability tables the trajectory measure is assembled from.
#[derive(Debug, Clone)]
pub struct MeasurementFrame<T> {
    d_a: usize,
    d_b: usize,
    d_r: usize,
    beta: T,
    tolerances: Tolerances<T>,
    initial: EndpointTables<T>,
    evolved: EndpointTables<T>,
    reservoir: ThermalState<T>,
    /// `|⟨m', r' | U | m, r⟩|²` with layout
    /// `(m*d_r + r) * d_total + (m'*d_r + r')`.
    kernel: Vec<T>,
}

impl<T: Scalar> MeasurementFrame<T> {
    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn d_r(&self) -> usize {
        self.d_r
    }

    pub fn d_ab(&self) -> usize {
        self.d_a * self.d_b
    }

    pub fn d_total(&self) -> usize {
        self.d_ab() * self.d_r
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tolerances
    }

    pub fn endpoint(&self, time: Time) -> &EndpointTables<T> {
        match time {
            Time::Initial => &self.initial,
            Time::Final => &self.evolved,
        }
    }

    pub fn reservoir(&self) -> &ThermalState<T> {
        &self.reservoir
    }

    /// Squared overlap `|⟨m | a, b⟩|²` at the given end.
    pub fn overlap(&self, time: Time, m: usize, a: usize, b: usize) -> T {
        let tables = self.endpoint(time);
        tables.overlap[m * self.d_ab() + a * self.d_b + b]
    }

    /// The full conditional-outcome table `|⟨m | a, b⟩|²` at one end, laid
    /// out `m * (d_a*d_b) + (a*d_b + b)`. Doubly stochastic: rows and
    /// columns each sum to one.
    pub fn conditional_overlap(&self, time: Time) -> &[T] {
        &self.endpoint(time).overlap
    }

    /// Squared kernel `|⟨m', r' | U | m, r⟩|²`.
    pub fn kernel(&self, m: usize, r: usize, mf: usize, rf: usize) -> T {
        let row = m * self.d_r + r;
        let col = mf * self.d_r + rf;
        self.kernel[row * self.d_total() + col]
    }

    /// Joint two-point transition table `p_m p_r |⟨m', r'|U|m, r⟩|²`, laid out
    /// like the kernel. Sums to one up to roundoff.
    pub fn transition_table(&self) -> Vec<T> {
        let d_r = self.d_r;
        let d_tot = self.d_total();
        let p_m = self.initial.state.joint().probabilities();
        let p_r = self.reservoir.density().probabilities();
        let mut out = vec![T::zero(); d_tot * d_tot];
        for m in 0..self.d_ab() {
            for r in 0..d_r {
                let w = p_m[m] * p_r[r];
                let row = m * d_r + r;
                for col in 0..d_tot {
                    out[row * d_tot + col] = w * self.kernel[row * d_tot + col];
                }
            }
        }
        out
    }

    /// Forward weight of one outcome tuple.
    pub fn forward_probability(&self, t: TrajectoryIndices) -> T {
        let p_m = self.initial.state.joint().probabilities()[t.m];
        let p_r = self.reservoir.density().probabilities()[t.r];
        p_m * p_r
            * self.overlap(Time::Initial, t.m, t.a, t.b)
            * self.kernel(t.m, t.r, t.mf, t.rf)
            * self.overlap(Time::Final, t.mf, t.af, t.bf)
    }

    /// Reverse weight of the same tuple: the evolved joint eigenvalue and a
    /// fresh thermal weight replace the forward-end probabilities, while the
    /// kernel and the overlaps are shared with the forward direction.
    pub fn reverse_probability(&self, t: TrajectoryIndices) -> T {
        let p_mf = self.evolved.state.joint().probabilities()[t.mf];
        let p_rf = self.reservoir.density().probabilities()[t.rf];
        p_mf * p_rf
            * self.overlap(Time::Initial, t.m, t.a, t.b)
            * self.kernel(t.m, t.r, t.mf, t.rf)
            * self.overlap(Time::Final, t.mf, t.af, t.bf)
    }

    /// Max deviation of the kernel from the time-reversed kernel computed with
    /// the transposed unitary and conjugated eigenbases. Exact algebra says
    /// zero; this measures roundoff only.
    pub fn microreversibility_deviation(&self, unitary: &ComplexMatrix<T>) -> T {
        let b_i = self
            .initial
            .state
            .joint()
            .spectrum()
            .vectors
            .kron(&self.reservoir.density().spectrum().vectors);
        let b_f = self
            .evolved
            .state
            .joint()
            .spectrum()
            .vectors
            .kron(&self.reservoir.density().spectrum().vectors);
        let reversed = b_i
            .conj()
            .dagger()
            .matmul(&unitary.transpose())
            .and_then(|m| m.matmul(&b_f.conj()))
            .expect("dimensions agree");
        let d_tot = self.d_total();
        let mut worst = T::zero();
        for row in 0..d_tot {
            for col in 0..d_tot {
                // reversed[(m,r),(m',r')] plays the kernel's role with the
                // two ends swapped in the amplitude, hence the same layout.
                let k = self.kernel[row * d_tot + col];
                let diff = (reversed[(row, col)].norm_sqr() - k).abs();
                worst = worst.max(diff);
            }
        }
        worst
    }
}

/// Builds the measurement frame of a process: evolves the joint state,
/// decomposes every operator canonically, and tabulates overlaps and kernel.
pub fn evolve<T: Scalar>(spec: &ProcessSpec<T>) -> Result<MeasurementFrame<T>, ProtocolError> {
    let reservoir = thermal_state(spec.reservoir_hamiltonian(), spec.beta, &spec.tolerances)?;
    assemble_frame(spec, spec.initial.clone(), reservoir, &mut |state| state)
}

/// Like [`evolve`], but every degenerate eigenspace (joint states, marginals,
/// reservoir) gets a random unitary basis rotation drawn from `rng`. Reported
/// ensemble quantities must be invariant under this; per-trajectory tables
/// are not. At `β = 0` the reservoir rotation also remixes energy labels
/// within the uniform cluster, which is invisible to all `β`-weighted heat
/// bookkeeping.
pub fn evolve_with_rotated_eigenbases<T: Scalar, R: Rng + ?Sized>(
    spec: &ProcessSpec<T>,
    rng: &mut R,
) -> Result<MeasurementFrame<T>, ProtocolError>
where
    StandardNormal: Distribution<T>,
{
    let gap = spec.tolerances.degeneracy_gap;
    let reservoir = thermal_state(spec.reservoir_hamiltonian(), spec.beta, &spec.tolerances)?
        .rotate_degenerate_eigenbasis(gap, rng);
    let initial = spec.initial.rotate_degenerate_eigenbases(gap, rng);
    assemble_frame(spec, initial, reservoir, &mut |state| {
        state.rotate_degenerate_eigenbases(gap, rng)
    })
}

fn assemble_frame<T: Scalar>(
    spec: &ProcessSpec<T>,
    initial_state: BipartiteState<T>,
    reservoir: ThermalState<T>,
    adjust_evolved: &mut dyn FnMut(BipartiteState<T>) -> BipartiteState<T>,
) -> Result<MeasurementFrame<T>, ProtocolError> {
    let tol = spec.tolerances;

    // ρ_full = ρ_AB ⊗ ρ_R, evolved by conjugation with U.
    let full = initial_state
        .joint()
        .matrix()
        .kron(reservoir.density().matrix());
    let u = &spec.unitary;
    let evolved_full = u.matmul(&full)?.matmul(&u.dagger())?;
    let evolved_joint = make_density(
        evolved_full.partial_trace(spec.d_ab(), spec.d_r(), Part::Left)?,
        &tol,
    )?;
    let evolved_state = adjust_evolved(BipartiteState::new(
        spec.d_a(),
        spec.d_b(),
        evolved_joint,
        &tol,
    )?);

    let initial = endpoint_tables(&initial_state);
    let evolved = endpoint_tables(&evolved_state);

    // Kernel |⟨m', r' | U | m, r⟩|² in the (possibly rotated) eigenbases.
    let b_i = initial
        .state
        .joint()
        .spectrum()
        .vectors
        .kron(&reservoir.density().spectrum().vectors);
    let b_f = evolved
        .state
        .joint()
        .spectrum()
        .vectors
        .kron(&reservoir.density().spectrum().vectors);
    let amp = b_f.dagger().matmul(&u.matmul(&b_i)?)?;
    let d_tot = spec.d_total();
    let mut kernel = vec![T::zero(); d_tot * d_tot];
    for initial_idx in 0..d_tot {
        for final_idx in 0..d_tot {
            kernel[initial_idx * d_tot + final_idx] = amp[(final_idx, initial_idx)].norm_sqr();
        }
    }

    Ok(MeasurementFrame {
        d_a: spec.d_a(),
        d_b: spec.d_b(),
        d_r: spec.d_r(),
        beta: spec.beta,
        tolerances: tol,
        initial,
        evolved,
        reservoir,
        kernel,
    })
}

fn endpoint_tables<T: Scalar>(state: &BipartiteState<T>) -> EndpointTables<T> {
    let d_ab = state.joint().dim();
    let product_basis = state
        .part_a()
        .spectrum()
        .vectors
        .kron(&state.part_b().spectrum().vectors);
    let amp = state
        .joint()
        .spectrum()
        .vectors
        .dagger()
        .matmul(&product_basis)
        .expect("square product");
    let mut overlap = vec![T::zero(); d_ab * d_ab];
    for m in 0..d_ab {
        for ab in 0..d_ab {
            overlap[m * d_ab + ab] = amp[(m, ab)].norm_sqr();
        }
    }
    let in_product_basis = product_basis
        .dagger()
        .matmul(state.joint().matrix())
        .and_then(|m| m.matmul(&product_basis))
        .expect("square product");
    let joint_outcome = (0..d_ab)
        .map(|ab| in_product_basis[(ab, ab)].re.max(T::zero()))
        .collect();
    EndpointTables {
        state: state.clone(),
        overlap,
        joint_outcome,
    }
}

/// One trajectory's outcome tuple: `(m, a, b, r)` at the initial end and
/// `(mf, af, bf, rf)` at the final end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct TrajectoryIndices {
    pub m: usize,
    pub a: usize,
    pub b: usize,
    pub r: usize,
    pub mf: usize,
    pub af: usize,
    pub bf: usize,
    pub rf: usize,
}

/// A trajectory with its forward and reverse weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trajectory<T> {
    pub idx: TrajectoryIndices,
    pub forward: T,
    pub reverse: T,
}

/// Whether enumeration keeps every tuple or only the forward support.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportFilter {
    Full,
    SupportedOnly,
}

/// The enumerated trajectory measure.
///
/// `trajectories` is in lexicographic `(m, a, b, r, mf, af, bf, rf)` order.
/// The totals and the off-support reverse mass are always accumulated over
/// the full tuple set, independent of the filter.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble<T> {
    pub trajectories: Vec<Trajectory<T>>,
    pub filter: SupportFilter,
    /// Count of tuples with forward weight above the support threshold.
    pub support_size: usize,
    /// Σ forward over all tuples; 1 up to roundoff.
    pub total_forward: T,
    /// Σ reverse over all tuples; 1 up to roundoff.
    pub total_reverse: T,
    /// Reverse mass on tuples outside the forward support. Zero exactly when
    /// the evolved joint state's rank has not grown; otherwise the integral
    /// identity deficit.
    pub off_support_reverse_mass: T,
}

/// Enumerates all outcome tuples in lexicographic order, accumulating both
/// directions in one pass.
pub fn forward_distribution<T: Scalar>(
    frame: &MeasurementFrame<T>,
    filter: SupportFilter,
) -> TrajectoryEnsemble<T> {
    let (d_a, d_b, d_r, d_ab) = (frame.d_a(), frame.d_b(), frame.d_r(), frame.d_ab());
    let threshold = frame.tolerances().support_threshold;
    let p_m = frame.initial.state.joint().probabilities();
    let p_mf = frame.evolved.state.joint().probabilities();
    let p_r = frame.reservoir.density().probabilities();

    let mut trajectories = Vec::new();
    let mut support_size = 0usize;
    let mut total_forward = T::zero();
    let mut total_reverse = T::zero();
    let mut off_mass = T::zero();

    for m in 0..d_ab {
        for a in 0..d_a {
            for b in 0..d_b {
                let ov_i = frame.overlap(Time::Initial, m, a, b);
                let w_i = p_m[m] * ov_i;
                for r in 0..d_r {
                    let w_ir = w_i * p_r[r];
                    for mf in 0..d_ab {
                        for af in 0..d_a {
                            for bf in 0..d_b {
                                let ov_f = frame.overlap(Time::Final, mf, af, bf);
                                for rf in 0..d_r {
                                    let k = frame.kernel(m, r, mf, rf);
                                    let forward = w_ir * k * ov_f;
                                    let reverse = p_mf[mf] * p_r[rf] * ov_i * k * ov_f;
                                    total_forward += forward;
                                    total_reverse += reverse;
                                    let supported = forward > threshold;
                                    if supported {
                                        support_size += 1;
                                    } else {
                                        off_mass += reverse;
                                    }
                                    if supported || filter == SupportFilter::Full {
                                        trajectories.push(Trajectory {
                                            idx: TrajectoryIndices {
                                                m,
                                                a,
                                                b,
                                                r,
                                                mf,
                                                af,
                                                bf,
                                                rf,
                                            },
                                            forward,
                                            reverse,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    TrajectoryEnsemble {
        trajectories,
        filter,
        support_size,
        total_forward,
        total_reverse,
        off_support_reverse_mass: off_mass,
    }
}
