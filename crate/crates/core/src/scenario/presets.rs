//! Built-in states and unitaries the configuration schema can name.
//!
//! Dimension requirements (Bell needs 2⊗2, the controlled flip needs 4⊗2,
//! swaps need matching factor dimensions) are validated by the resolver;
//! builders here assume them.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::ComplexMatrix;
use crate::scalar::Scalar;
use crate::state::random_unitary;

/// `(|00⟩ + |11⟩)(⟨00| + ⟨11|) / 2` on 2⊗2: maximally entangled, maximally
/// mixed marginals.
pub fn bell_matrix<T: Scalar>() -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(4, 4);
    let half = Complex::new(T::cst(0.5), T::zero());
    for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
        m[(i, j)] = half;
    }
    m
}

/// `|++⟩⟨++| ⊗ |0⟩⟨0|` on 4⊗2: both control qubits uniformly superposed,
/// target clear — the canonical AND-computation input.
pub fn superposed_toffoli_input_matrix<T: Scalar>() -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(8, 8);
    let quarter = Complex::new(T::cst(0.25), T::zero());
    for &i in &[0usize, 2, 4, 6] {
        for &j in &[0usize, 2, 4, 6] {
            m[(i, j)] = quarter;
        }
    }
    m
}

/// Full-rank product state with strictly descending weights `w_i ∝ d - i`
/// on each factor; normalization `Σ w_i = 1` holds exactly in exact
/// arithmetic, and to roundoff here.
pub fn product_mixed_matrix<T: Scalar>(d_a: usize, d_b: usize) -> ComplexMatrix<T> {
    let weights = |d: usize| -> Vec<T> {
        (0..d)
            .map(|i| T::cst(2.0 * (d - i) as f64 / (d * (d + 1)) as f64))
            .collect()
    };
    let a = ComplexMatrix::from_real_diagonal(&weights(d_a));
    let b = ComplexMatrix::from_real_diagonal(&weights(d_b));
    a.kron(&b)
}

/// Ginibre construction `G G† / tr(G G†)` with `G` of shape `dim × rank`:
/// a random mixed state of exactly the requested rank (almost surely).
pub fn random_state_matrix<T: Scalar, R: Rng + ?Sized>(
    dim: usize,
    rank: usize,
    rng: &mut R,
) -> ComplexMatrix<T>
where
    StandardNormal: Distribution<T>,
{
    let g = ComplexMatrix::from_fn(dim, rank, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = g.matmul(&g.dagger()).expect("dims match");
    let tr = m.trace().expect("square").re;
    m.scale_real(tr.recip())
}

/// Doubly controlled flip on A⊗B (A = two control qubits, B = target),
/// tensored with the identity on the reservoir. Swaps `|11⟩|0⟩ ↔ |11⟩|1⟩`
/// and fixes everything else.
pub fn toffoli_unitary<T: Scalar>(d_r: usize) -> ComplexMatrix<T> {
    let mut t = ComplexMatrix::<T>::identity(8);
    let zero = Complex::new(T::zero(), T::zero());
    let one = Complex::new(T::one(), T::zero());
    t[(6, 6)] = zero;
    t[(7, 7)] = zero;
    t[(6, 7)] = one;
    t[(7, 6)] = one;
    t.kron(&ComplexMatrix::identity(d_r))
}

/// `cos(angle)·1 + i·sin(angle)·P` for an involutive permutation `P`; always
/// unitary since `P² = 1` and `P = P†`.
fn partial_permutation<T: Scalar>(perm: &ComplexMatrix<T>, angle: T) -> ComplexMatrix<T> {
    let dim = perm.rows();
    let (c, s) = (angle.cos(), angle.sin());
    let mut m = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            m[(i, j)] = perm[(i, j)] * Complex::new(T::zero(), s);
        }
        m[(i, i)] += Complex::new(c, T::zero());
    }
    m
}

/// Partial swap between A and R on A⊗B⊗R (composite index
/// `(a·d_b + b)·d_r + r`); `d_r = d_a`. At `angle = π/2` it is `i·SWAP`.
pub fn partial_swap_ar<T: Scalar>(d_a: usize, d_b: usize, angle: T) -> ComplexMatrix<T> {
    let d_r = d_a;
    let dim = d_a * d_b * d_r;
    let one = Complex::new(T::one(), T::zero());
    let mut perm = ComplexMatrix::zeros(dim, dim);
    for a in 0..d_a {
        for b in 0..d_b {
            for r in 0..d_r {
                let from = (a * d_b + b) * d_r + r;
                let to = (r * d_b + b) * d_r + a;
                perm[(to, from)] = one;
            }
        }
    }
    partial_permutation(&perm, angle)
}

/// Partial swap between B and R on A⊗B⊗R; `d_r = d_b`.
pub fn partial_swap_br<T: Scalar>(d_a: usize, d_b: usize, angle: T) -> ComplexMatrix<T> {
    let d_r = d_b;
    let dim = d_a * d_b * d_r;
    let one = Complex::new(T::one(), T::zero());
    let mut perm = ComplexMatrix::zeros(dim, dim);
    for a in 0..d_a {
        for b in 0..d_b {
            for r in 0..d_r {
                let from = (a * d_b + b) * d_r + r;
                let to = (a * d_b + r) * d_r + b;
                perm[(to, from)] = one;
            }
        }
    }
    partial_permutation(&perm, angle)
}

/// Haar-distributed unitary on the full A⊗B⊗R space.
pub fn haar_unitary<T: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix<T>
where
    StandardNormal: Distribution<T>,
{
    random_unitary(dim, rng)
}
