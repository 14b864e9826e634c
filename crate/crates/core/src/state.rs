//! Density operators, bipartite marginals, thermal reservoir states, and
//! seeded random ensembles (Haar unitaries, fixed-rank mixed states).

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{hermitian_eig, ComplexMatrix, LinalgError, Part, SpectralDecomposition};
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// Errors from state construction.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("trace is {trace} (re) + {trace_im}i, expected 1 within {allowed:e}")]
    TraceNotOne {
        trace: f64,
        trace_im: f64,
        allowed: f64,
    },
    #[error("eigenvalue {value:e} below the clipping band {band:e}")]
    NegativeEigenvalue { value: f64, band: f64 },
    #[error("eigenvalue {value} exceeds 1 beyond the clipping band")]
    EigenvalueAboveOne { value: f64 },
    #[error("inverse temperature must be finite and nonnegative, got {beta}")]
    InvalidBeta { beta: f64 },
    #[error("rank {rank} invalid for dimension {dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("joint dimension {joint} is not {d_a}*{d_b}")]
    BadPartition {
        joint: usize,
        d_a: usize,
        d_b: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Positive semidefinite unit-trace operator with its canonical spectrum.
///
/// The stored matrix is the caller's input (validated, not reconstructed);
/// the spectrum is the canonical eigendecomposition with eigenvalues clipped
/// into `[0, 1]` inside the tolerance band.
#[derive(Debug, Clone)]
pub struct DensityOperator<T> {
    matrix: ComplexMatrix<T>,
    spectrum: SpectralDecomposition<T>,
}

impl<T: Scalar> DensityOperator<T> {
    pub fn dim(&self) -> usize {
        self.spectrum.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition<T> {
        &self.spectrum
    }

    /// Eigenvalues, descending, clipped into `[0, 1]`.
    pub fn probabilities(&self) -> &[T] {
        &self.spectrum.values
    }

    /// Count of eigenvalues strictly above `threshold`.
    pub fn rank(&self, threshold: T) -> usize {
        self.spectrum
            .values
            .iter()
            .filter(|&&p| p > threshold)
            .count()
    }

    /// Replaces the eigenbasis inside each degenerate cluster by a random
    /// unitary mixture, leaving the operator itself unchanged. Probes that
    /// downstream results do not depend on the residual basis freedom.
    pub fn rotate_degenerate_eigenbasis<R: Rng + ?Sized>(&self, gap: T, rng: &mut R) -> Self
    where
        StandardNormal: Distribution<T>,
    {
        let spectrum = self
            .spectrum
            .rotate_degenerate_clusters(gap, |k| random_unitary(k, rng));
        Self {
            matrix: self.matrix.clone(),
            spectrum,
        }
    }
}

/// Validates a candidate density matrix and attaches its canonical spectrum.
pub fn make_density<T: Scalar>(
    matrix: ComplexMatrix<T>,
    tol: &Tolerances<T>,
) -> Result<DensityOperator<T>, StateError> {
    let tr = matrix.trace()?;
    if (tr.re - T::one()).abs() > tol.trace_deviation || tr.im.abs() > tol.trace_deviation {
        return Err(StateError::TraceNotOne {
            trace: tr.re.as_f64(),
            trace_im: tr.im.as_f64(),
            allowed: tol.trace_deviation.as_f64(),
        });
    }
    let mut spectrum = hermitian_eig(&matrix, tol)?;
    for v in &mut spectrum.values {
        if *v < -tol.negative_eigenvalue {
            return Err(StateError::NegativeEigenvalue {
                value: v.as_f64(),
                band: tol.negative_eigenvalue.as_f64(),
            });
        }
        if *v > T::one() + tol.negative_eigenvalue {
            return Err(StateError::EigenvalueAboveOne { value: v.as_f64() });
        }
        *v = v.max(T::zero()).min(T::one());
    }
    Ok(DensityOperator { matrix, spectrum })
}

/// Joint state of parts A and B together with its two reduced states.
#[derive(Debug, Clone)]
pub struct BipartiteState<T> {
    d_a: usize,
    d_b: usize,
    joint: DensityOperator<T>,
    part_a: DensityOperator<T>,
    part_b: DensityOperator<T>,
}

impl<T: Scalar> BipartiteState<T> {
    /// Splits a joint density operator into marginals; `joint` must live on a
    /// `d_a * d_b` dimensional space with index layout `i_a * d_b + i_b`.
    pub fn new(
        d_a: usize,
        d_b: usize,
        joint: DensityOperator<T>,
        tol: &Tolerances<T>,
    ) -> Result<Self, StateError> {
        if d_a == 0 || d_b == 0 || d_a * d_b != joint.dim() {
            return Err(StateError::BadPartition {
                joint: joint.dim(),
                d_a,
                d_b,
            });
        }
        let part_a = make_density(joint.matrix().partial_trace(d_a, d_b, Part::Left)?, tol)?;
        let part_b = make_density(joint.matrix().partial_trace(d_a, d_b, Part::Right)?, tol)?;
        Ok(Self {
            d_a,
            d_b,
            joint,
            part_a,
            part_b,
        })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn joint(&self) -> &DensityOperator<T> {
        &self.joint
    }

    pub fn part_a(&self) -> &DensityOperator<T> {
        &self.part_a
    }

    pub fn part_b(&self) -> &DensityOperator<T> {
        &self.part_b
    }

    /// Rotates degenerate eigenbases of the joint state and both marginals.
    pub fn rotate_degenerate_eigenbases<R: Rng + ?Sized>(&self, gap: T, rng: &mut R) -> Self
    where
        StandardNormal: Distribution<T>,
    {
        Self {
            d_a: self.d_a,
            d_b: self.d_b,
            joint: self.joint.rotate_degenerate_eigenbasis(gap, rng),
            part_a: self.part_a.rotate_degenerate_eigenbasis(gap, rng),
            part_b: self.part_b.rotate_degenerate_eigenbasis(gap, rng),
        }
    }
}

/// Gibbs state of a reservoir Hamiltonian, with level energies kept aligned
/// to the stored spectrum (occupation descending, energy ascending).
#[derive(Debug, Clone)]
pub struct ThermalState<T> {
    density: DensityOperator<T>,
    energies: Vec<T>,
}

impl<T: Scalar> ThermalState<T> {
    pub fn density(&self) -> &DensityOperator<T> {
        &self.density
    }

    /// Energy of level `k`, aligned with `density().probabilities()[k]`.
    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Rotates the basis inside each equal-occupation cluster, keeping the
    /// operator fixed. For `β > 0` equal occupation means equal energy, so
    /// the energy labels stay aligned; at `β = 0` the whole uniform spectrum
    /// is one cluster and energy labels lose their alignment, which is
    /// invisible to anything weighted by `β`.
    pub fn rotate_degenerate_eigenbasis<R: Rng + ?Sized>(&self, gap: T, rng: &mut R) -> Self
    where
        StandardNormal: Distribution<T>,
    {
        Self {
            density: self.density.rotate_degenerate_eigenbasis(gap, rng),
            energies: self.energies.clone(),
        }
    }
}

/// Builds `exp(-β H) / Z` from a Hermitian `H` and inverse temperature `β`.
///
/// Energies are shifted by the ground level before exponentiation so that
/// large `β` stays well conditioned; levels are ordered by ascending energy,
/// which makes the stored occupation spectrum descending.
pub fn thermal_state<T: Scalar>(
    hamiltonian: &ComplexMatrix<T>,
    beta: T,
    tol: &Tolerances<T>,
) -> Result<ThermalState<T>, StateError> {
    if !beta.is_finite() || beta < T::zero() {
        return Err(StateError::InvalidBeta {
            beta: beta.as_f64(),
        });
    }
    let eig = hermitian_eig(hamiltonian, tol)?;
    let n = eig.dim();
    // hermitian_eig sorts descending; flip to ascending energy.
    let energies: Vec<T> = eig.values.iter().rev().copied().collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| eig.vectors[(i, n - 1 - j)]);
    let ground = energies[0];
    let weights: Vec<T> = energies
        .iter()
        .map(|&e| (-beta * (e - ground)).exp())
        .collect();
    let z: T = weights.iter().copied().sum();
    let probabilities: Vec<T> = weights.iter().map(|&w| w / z).collect();

    let mut matrix = ComplexMatrix::zeros(n, n);
    for k in 0..n {
        let p = probabilities[k];
        for i in 0..n {
            let vik = vectors[(i, k)];
            for j in 0..n {
                matrix[(i, j)] = matrix[(i, j)] + (vik * vectors[(j, k)].conj()).scale(p);
            }
        }
    }
    // The spectrum is constructed directly: probabilities are descending by
    // construction and the basis is already canonical for H.
    let spectrum = SpectralDecomposition {
        values: probabilities,
        vectors,
    };
    Ok(ThermalState {
        density: DensityOperator { matrix, spectrum },
        energies,
    })
}

/// Von Neumann entropy `-Σ p ln p` in nats, with `0 ln 0 = 0`.
pub fn von_neumann_entropy<T: Scalar>(state: &DensityOperator<T>) -> T {
    state
        .probabilities()
        .iter()
        .filter(|&&p| p > T::zero())
        .map(|&p| -p * p.ln())
        .sum()
}

/// `S(A) + S(B) - S(AB)` in nats; nonnegative for valid states.
pub fn quantum_mutual_information<T: Scalar>(state: &BipartiteState<T>) -> T {
    von_neumann_entropy(state.part_a()) + von_neumann_entropy(state.part_b())
        - von_neumann_entropy(state.joint())
}

/// Haar-distributed unitary via Gram–Schmidt of a complex Gaussian matrix.
///
/// Two orthogonalization passes keep the columns orthonormal to machine
/// precision; diagonal phases are fixed by the positive normalization, which
/// is exactly the convention that makes the distribution Haar.
pub fn random_unitary<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T>
where
    StandardNormal: Distribution<T>,
{
    let mut q: Vec<Vec<Complex<T>>> = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut v: Vec<Complex<T>> = (0..dim)
            .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        loop {
            for _ in 0..2 {
                for u in &q {
                    let coef = dot_conj(u, &v);
                    for (vi, &ui) in v.iter_mut().zip(u) {
                        *vi = *vi - ui * coef;
                    }
                }
            }
            let norm = vec_norm(&v);
            if norm > T::cst(1e-6) {
                let inv = norm.recip();
                for vi in &mut v {
                    *vi = vi.scale(inv);
                }
                break;
            }
            // Essentially-dependent draw (measure zero): take a fresh column.
            v = (0..dim)
                .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
        }
        q.push(v);
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| q[j][i])
}

/// Random density operator of the given rank: `G G† / tr` with `G` a
/// `dim x rank` complex Gaussian matrix.
pub fn random_density<T: Scalar, R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
    tol: &Tolerances<T>,
) -> Result<DensityOperator<T>, StateError>
where
    StandardNormal: Distribution<T>,
{
    if rank == 0 || rank > dim {
        return Err(StateError::BadRank { rank, dim });
    }
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = g.matmul(&g.dagger()).expect("dims match");
    let tr = m.trace().expect("square").re;
    make_density(m.scale_real(tr.recip()), tol)
}

fn dot_conj<T: Scalar>(u: &[Complex<T>], w: &[Complex<T>]) -> Complex<T> {
    u.iter()
        .zip(w)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (&ui, &wi)| {
            acc + ui.conj() * wi
        })
}

fn vec_norm<T: Scalar>(w: &[Complex<T>]) -> T {
    w.iter()
        .map(|x| x.norm_sqr())
        .fold(T::zero(), |acc, x| acc + x)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn tol() -> Tolerances<f64> {
        Tolerances::default_profile()
    }

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn make_density_accepts_maximally_mixed_and_clips_nothing() {
        let m = ComplexMatrix::from_real_diagonal(&[0.25; 4]);
        let d = make_density(m, &tol()).unwrap();
        assert_eq!(d.probabilities(), &[0.25; 4]);
        assert_eq!(d.rank(1e-12), 4);
    }

    #[test]
    fn make_density_rejects_bad_trace_and_deep_negativity() {
        let m = ComplexMatrix::from_real_diagonal(&[0.5, 0.4]);
        assert!(matches!(
            make_density(m, &tol()),
            Err(StateError::TraceNotOne { .. })
        ));
        let m = ComplexMatrix::from_real_diagonal(&[0.7, 0.7, -0.4]);
        assert!(matches!(
            make_density(m, &tol()),
            Err(StateError::NegativeEigenvalue { .. })
        ));
        // Eigenvalues come out descending, so an above-one violation is seen
        // before the matching negative one.
        let m = ComplexMatrix::from_real_diagonal(&[1.5, -0.5]);
        assert!(matches!(
            make_density(m, &tol()),
            Err(StateError::EigenvalueAboveOne { .. })
        ));
    }

    #[test]
    fn make_density_clips_shallow_negative_eigenvalues_to_zero() {
        let m = ComplexMatrix::from_real_diagonal(&[1.0 + 1e-12, -1e-12]);
        let d = make_density(m, &tol()).unwrap();
        assert_eq!(d.probabilities()[1], 0.0);
        assert_eq!(d.probabilities()[0], 1.0);
    }

    #[test]
    fn bell_state_marginals_are_maximally_mixed() {
        // |Φ⟩ = (|00⟩ + |11⟩)/√2 as a 4x4 projector.
        let h = 0.5;
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(0, 0)] = c(h, 0.0);
        m[(0, 3)] = c(h, 0.0);
        m[(3, 0)] = c(h, 0.0);
        m[(3, 3)] = c(h, 0.0);
        let joint = make_density(m, &tol()).unwrap();
        let state = BipartiteState::new(2, 2, joint, &tol()).unwrap();
        assert!((state.part_a().probabilities()[0] - 0.5).abs() < 1e-14);
        assert!((state.part_b().probabilities()[1] - 0.5).abs() < 1e-14);
        // Pure joint, maximally mixed parts: S_AB = 0, S_A = S_B = ln 2.
        assert!(von_neumann_entropy(state.joint()).abs() < 1e-12);
        assert!((von_neumann_entropy(state.part_a()) - 2f64.ln()).abs() < 1e-12);
        assert!((quantum_mutual_information(&state) - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn thermal_state_matches_closed_form_two_level() {
        // H = diag(0, 1), β = ln 2 ⇒ p = (2/3, 1/3), energies (0, 1).
        let h = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let th = thermal_state(&h, 2f64.ln(), &tol()).unwrap();
        assert!((th.density().probabilities()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((th.density().probabilities()[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(th.energies(), &[0.0, 1.0]);
        // Eigenbasis of a diagonal H is computational, level k = axis k.
        assert_eq!(th.density().spectrum().vectors[(0, 0)], c(1.0, 0.0));
        assert_eq!(th.density().spectrum().vectors[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn thermal_state_at_zero_beta_is_maximally_mixed() {
        let h = ComplexMatrix::from_real_diagonal(&[0.3, 1.1, 2.7]);
        let th = thermal_state(&h, 0.0, &tol()).unwrap();
        for &p in th.density().probabilities() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(th.energies(), &[0.3, 1.1, 2.7]);
    }

    #[test]
    fn thermal_state_handles_unordered_and_shifted_spectra() {
        // Energies out of order and far from zero: the shift keeps Z finite.
        let h = ComplexMatrix::from_real_diagonal(&[500.0, 499.0]);
        let th = thermal_state(&h, 50.0, &tol()).unwrap();
        assert_eq!(th.energies(), &[499.0, 500.0]);
        let z = 1.0 + (-50.0f64).exp();
        assert!((th.density().probabilities()[0] - 1.0 / z).abs() < 1e-15);
    }

    #[test]
    fn thermal_state_rejects_negative_or_nan_beta() {
        let h = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        assert!(matches!(
            thermal_state(&h, -1.0, &tol()),
            Err(StateError::InvalidBeta { .. })
        ));
        assert!(matches!(
            thermal_state(&h, f64::NAN, &tol()),
            Err(StateError::InvalidBeta { .. })
        ));
    }

    #[test]
    fn entropy_is_additive_on_product_states() {
        let a = make_density(ComplexMatrix::from_real_diagonal(&[0.7, 0.3]), &tol()).unwrap();
        let b = make_density(ComplexMatrix::from_real_diagonal(&[0.6, 0.4]), &tol()).unwrap();
        let joint = make_density(a.matrix().kron(b.matrix()), &tol()).unwrap();
        let s = BipartiteState::new(2, 2, joint, &tol()).unwrap();
        let sum = von_neumann_entropy(&a) + von_neumann_entropy(&b);
        assert!((von_neumann_entropy(s.joint()) - sum).abs() < 1e-12);
        assert!(quantum_mutual_information(&s).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary_and_seed_stable() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let u: ComplexMatrix<f64> = random_unitary(6, &mut rng);
        assert!(u.unitarity_deviation() < 1e-12);
        let mut rng2 = ChaCha12Rng::seed_from_u64(7);
        let u2: ComplexMatrix<f64> = random_unitary(6, &mut rng2);
        assert_eq!(u, u2);
    }

    #[test]
    fn random_density_has_requested_rank() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let d: DensityOperator<f64> = random_density(4, 2, &mut rng, &tol()).unwrap();
        assert_eq!(d.rank(1e-12), 2);
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(matches!(
            random_density::<f64, _>(4, 5, &mut rng, &tol()),
            Err(StateError::BadRank { .. })
        ));
    }

    #[test]
    fn degenerate_eigenbasis_rotation_keeps_operator_fixed() {
        let m = ComplexMatrix::from_real_diagonal(&[0.4, 0.4, 0.1, 0.1]);
        let d = make_density(m.clone(), &tol()).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let rot = d.rotate_degenerate_eigenbasis(tol().degeneracy_gap, &mut rng);
        assert!(rot.spectrum().reconstruct().max_abs_diff(&m) < 1e-12);
        assert!(rot.spectrum().vectors.max_abs_diff(&d.spectrum().vectors) > 0.1);
        assert_eq!(rot.probabilities(), d.probabilities());
    }
}
