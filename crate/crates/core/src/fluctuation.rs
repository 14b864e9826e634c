//! Per-trajectory stochastic increments and the distribution-level theorem
//! checks: exponential-average identity, detailed forward/reverse ratio,
//! entropy-production inequality, divergence identity, and erasure bounds.
//!
//! Quantities are in nats. A trajectory's entropy production exponent is
//! `σ = Δs_A + Δs_B - ΔI - βQ`; the reverse-to-forward weight ratio equals
//! `e^{-σ}` identically on the forward support, so the exponential average
//! `⟨e^{-σ}⟩` equals the total reverse mass that sits on the forward support
//! — exactly one when the evolved joint state's rank has not grown.

use serde::Serialize;

use crate::protocol::{
    MeasurementFrame, SupportFilter, Time, TrajectoryEnsemble, TrajectoryIndices,
};
use crate::scalar::Scalar;
use crate::state::{quantum_mutual_information, von_neumann_entropy};
use crate::tolerance::Tolerances;

/// Errors from increment and check evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluctuationError {
    #[error("trajectory {idx:?} lies outside the forward support")]
    OffSupport { idx: TrajectoryIndices },
    #[error("no trajectory carries forward probability above the support threshold")]
    SupportEmpty,
    #[error("⟨Δs_B⟩ = {delta_s_b:e} is not zero within {allowed:e}; the erasure bound needs an invariant memory side")]
    AssumptionViolated { delta_s_b: f64, allowed: f64 },
}

/// The five per-trajectory increments; also reused as their ensemble averages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StochasticIncrements<T> {
    /// Local entropy change of part A: `ln p_a - ln p_a'`.
    pub delta_s_a: T,
    /// Local entropy change of part B: `ln p_b - ln p_b'`.
    pub delta_s_b: T,
    /// Mutual-information change along eigenbasis outcomes.
    pub delta_i: T,
    /// Mutual-information change along local-eigenbasis joint outcomes
    /// (`⟨a,b|ρ|a,b⟩` in place of the joint eigenvalue).
    pub delta_j: T,
    /// Heat released to the reservoir times inverse temperature:
    /// `β (E_r - E_r')`.
    pub beta_q: T,
}

/// Which information increment enters the erasure bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InformationKind {
    /// `ΔJ`: classical correlations read in the local eigenbases.
    Classical,
    /// `ΔI`: eigenbasis mutual information.
    Quantum,
}

/// How a report's distribution-level numbers were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    Exact,
    Sampled {
        samples: usize,
        seed: u64,
        workers: usize,
    },
}

/// Standard errors attached to sampled estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledErrors<T> {
    pub ift: T,
    pub kl: T,
    pub averages: StochasticIncrements<T>,
}

/// Distribution-level summary of one protocol run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleReport<T> {
    pub mode: ReportMode,
    /// Tuples with forward weight above the support threshold.
    pub support_size: usize,
    /// Σ forward over all tuples (1 up to roundoff).
    pub total_forward: T,
    /// Σ reverse over all tuples (1 up to roundoff).
    pub total_reverse: T,
    /// Reverse mass outside the forward support; the exponential-average
    /// deficit `1 - ⟨e^{-σ}⟩`.
    pub reverse_mass_off_support: T,
    /// `⟨e^{-σ}⟩` over the forward distribution.
    pub ift_value: T,
    /// Ensemble averages of the per-trajectory increments.
    pub averages: StochasticIncrements<T>,
    /// `⟨Δs_A⟩ + ⟨Δs_B⟩ - ⟨ΔI⟩ - β⟨Q⟩`; nonnegative up to roundoff.
    pub inequality_slack: T,
    /// `Σ p ln(p/p̃)` over the forward support; equals the slack identically.
    pub kl_divergence: T,
    /// Max over the support of `|p̃/p - e^{-σ}| / (p̃/p)`.
    pub crooks_max_relative_residual: T,
    /// `S(ρ_A^f) - S(ρ_A^i)`, the density-functional side of `⟨Δs_A⟩`.
    pub entropy_change_a: T,
    /// `S(ρ_B^f) - S(ρ_B^i)`.
    pub entropy_change_b: T,
    /// `I(A:B)_f - I(A:B)_i`, the density-functional side of `⟨ΔI⟩`.
    pub mutual_information_change: T,
    /// Standard errors when `mode` is sampled.
    pub standard_errors: Option<SampledErrors<T>>,
}

/// Per-trajectory increments; errors off the forward support, where the
/// logarithms are not finite.
pub fn increments<T: Scalar>(
    frame: &MeasurementFrame<T>,
    idx: TrajectoryIndices,
) -> Result<StochasticIncrements<T>, FluctuationError> {
    let initial = frame.endpoint(Time::Initial);
    let evolved = frame.endpoint(Time::Final);
    let d_b = frame.d_b();

    let p_m = initial.state.joint().probabilities()[idx.m];
    let p_a = initial.state.part_a().probabilities()[idx.a];
    let p_b = initial.state.part_b().probabilities()[idx.b];
    let q_i = initial.joint_outcome[idx.a * d_b + idx.b];
    let p_mf = evolved.state.joint().probabilities()[idx.mf];
    let p_af = evolved.state.part_a().probabilities()[idx.af];
    let p_bf = evolved.state.part_b().probabilities()[idx.bf];
    let q_f = evolved.joint_outcome[idx.af * d_b + idx.bf];

    let all_positive = p_m > T::zero()
        && p_a > T::zero()
        && p_b > T::zero()
        && q_i > T::zero()
        && p_mf > T::zero()
        && p_af > T::zero()
        && p_bf > T::zero()
        && q_f > T::zero();
    if !all_positive {
        return Err(FluctuationError::OffSupport { idx });
    }

    let energies = frame.reservoir().energies();
    let beta_q = frame.beta() * (energies[idx.r] - energies[idx.rf]);
    Ok(StochasticIncrements {
        delta_s_a: p_a.ln() - p_af.ln(),
        delta_s_b: p_b.ln() - p_bf.ln(),
        delta_i: (p_mf.ln() - p_af.ln() - p_bf.ln()) - (p_m.ln() - p_a.ln() - p_b.ln()),
        delta_j: (q_f.ln() - p_af.ln() - p_bf.ln()) - (q_i.ln() - p_a.ln() - p_b.ln()),
        beta_q,
    })
}

/// `⟨Δs_A⟩ + ⟨Δs_B⟩ - ⟨ΔI⟩ - β⟨Q⟩` from averaged increments.
pub fn inequality_slack<T: Scalar>(averages: &StochasticIncrements<T>) -> T {
    averages.delta_s_a + averages.delta_s_b - averages.delta_i - averages.beta_q
}

/// Erasure-bound slack `⟨Δs_A⟩ - ⟨Δinfo⟩ - β⟨Q⟩` for a process that leaves
/// the B side invariant. Errors if `⟨Δs_B⟩` is not zero within `tol.check`.
pub fn landauer_check<T: Scalar>(
    averages: &StochasticIncrements<T>,
    kind: InformationKind,
    tol: &Tolerances<T>,
) -> Result<T, FluctuationError> {
    if averages.delta_s_b.abs() > tol.check {
        return Err(FluctuationError::AssumptionViolated {
            delta_s_b: averages.delta_s_b.as_f64(),
            allowed: tol.check.as_f64(),
        });
    }
    let info = match kind {
        InformationKind::Classical => averages.delta_j,
        InformationKind::Quantum => averages.delta_i,
    };
    Ok(averages.delta_s_a - info - averages.beta_q)
}

/// `⟨e^{-σ}⟩` over the forward distribution.
pub fn integral_ft<T: Scalar>(
    frame: &MeasurementFrame<T>,
    ensemble: &TrajectoryEnsemble<T>,
) -> Result<T, FluctuationError> {
    Ok(analyze(frame, ensemble)?.ift_value)
}

/// Max relative deviation of `p̃/p` from `e^{-σ}` over the forward support.
pub fn crooks_check<T: Scalar>(
    frame: &MeasurementFrame<T>,
    ensemble: &TrajectoryEnsemble<T>,
) -> Result<T, FluctuationError> {
    Ok(analyze(frame, ensemble)?.crooks_max_relative_residual)
}

/// `Σ p ln(p/p̃)` over the forward support.
pub fn kl_divergence<T: Scalar>(
    frame: &MeasurementFrame<T>,
    ensemble: &TrajectoryEnsemble<T>,
) -> Result<T, FluctuationError> {
    Ok(analyze(frame, ensemble)?.kl_divergence)
}

/// One exact pass over the enumerated ensemble, producing the full report.
pub fn analyze<T: Scalar>(
    frame: &MeasurementFrame<T>,
    ensemble: &TrajectoryEnsemble<T>,
) -> Result<EnsembleReport<T>, FluctuationError> {
    let threshold = frame.tolerances().support_threshold;
    let mut ift = T::zero();
    let mut averages = StochasticIncrements::<T>::default();
    let mut kl = T::zero();
    let mut crooks_worst = T::zero();
    let mut supported = 0usize;

    for trajectory in &ensemble.trajectories {
        let p = trajectory.forward;
        if p <= threshold {
            continue;
        }
        supported += 1;
        let inc = increments(frame, trajectory.idx)?;
        let exponent = -inc.delta_s_a - inc.delta_s_b + inc.delta_i + inc.beta_q;
        let boltzmann = exponent.exp();
        ift += p * boltzmann;
        averages.delta_s_a += p * inc.delta_s_a;
        averages.delta_s_b += p * inc.delta_s_b;
        averages.delta_i += p * inc.delta_i;
        averages.delta_j += p * inc.delta_j;
        averages.beta_q += p * inc.beta_q;
        let ratio = trajectory.reverse / p;
        kl += p * (p.ln() - trajectory.reverse.ln());
        let residual = (ratio - boltzmann).abs() / ratio;
        crooks_worst = crooks_worst.max(residual);
    }
    if supported == 0 {
        return Err(FluctuationError::SupportEmpty);
    }

    let initial = frame.endpoint(Time::Initial);
    let evolved = frame.endpoint(Time::Final);
    Ok(EnsembleReport {
        mode: ReportMode::Exact,
        support_size: ensemble.support_size,
        total_forward: ensemble.total_forward,
        total_reverse: ensemble.total_reverse,
        reverse_mass_off_support: ensemble.off_support_reverse_mass,
        ift_value: ift,
        averages,
        inequality_slack: inequality_slack(&averages),
        kl_divergence: kl,
        crooks_max_relative_residual: crooks_worst,
        entropy_change_a: von_neumann_entropy(evolved.state.part_a())
            - von_neumann_entropy(initial.state.part_a()),
        entropy_change_b: von_neumann_entropy(evolved.state.part_b())
            - von_neumann_entropy(initial.state.part_b()),
        mutual_information_change: quantum_mutual_information(&evolved.state)
            - quantum_mutual_information(&initial.state),
        standard_errors: None,
    })
}

/// Convenience: enumerate on the forward support and analyze in one call.
pub fn analyze_process<T: Scalar>(
    frame: &MeasurementFrame<T>,
) -> Result<EnsembleReport<T>, FluctuationError> {
    let ensemble = crate::protocol::forward_distribution(frame, SupportFilter::SupportedOnly);
    analyze(frame, &ensemble)
}

/// Single-time information content `⟨ln(p_m / (p_a p_b))⟩` over the joint
/// measurement distribution at one protocol end. Diagnostic.
pub fn average_information_content<T: Scalar>(frame: &MeasurementFrame<T>, time: Time) -> T {
    let tables = frame.endpoint(time);
    let joint_p = tables.state.joint().probabilities();
    let pa = tables.state.part_a().probabilities();
    let pb = tables.state.part_b().probabilities();
    let (d_a, d_b, d_ab) = (frame.d_a(), frame.d_b(), frame.d_ab());
    let mut acc = T::zero();
    for m in 0..d_ab {
        if joint_p[m] <= T::zero() {
            continue;
        }
        for a in 0..d_a {
            for b in 0..d_b {
                let w = joint_p[m] * tables.overlap[m * d_ab + a * d_b + b];
                if w > T::zero() && pa[a] > T::zero() && pb[b] > T::zero() {
                    acc += w * (joint_p[m].ln() - pa[a].ln() - pb[b].ln());
                }
            }
        }
    }
    acc
}

/// The joint outcome distribution obtained by measuring the local eigenbases
/// first and the joint eigenbasis on the collapsed state second, laid out
/// like the overlap table. Differs from the protocol's own conditioning
/// (joint first) unless the state is compatible with both orders. Diagnostic.
pub fn reversed_conditioning_distribution<T: Scalar>(
    frame: &MeasurementFrame<T>,
    time: Time,
) -> Vec<T> {
    let tables = frame.endpoint(time);
    let d_ab = frame.d_ab();
    let mut out = vec![T::zero(); d_ab * d_ab];
    for m in 0..d_ab {
        for ab in 0..d_ab {
            out[m * d_ab + ab] = tables.joint_outcome[ab] * tables.overlap[m * d_ab + ab];
        }
    }
    out
}
