//! Randomized invariant checks over the public API.
//!
//! Each property draws process specifications from a small family of
//! dimensions, state ranks, and inverse temperatures, then asserts an
//! identity that must hold for every instance: table normalizations,
//! microreversibility, the detailed ratio on the forward support, the
//! exponential average, the entropy/information average identities, and
//! invariance under re-choosing bases inside degenerate eigenspaces.

use num_complex::Complex;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use qfluct_core::linalg::hermitian_eig;
use qfluct_core::linalg::Part;
use qfluct_core::scenario::presets;
use qfluct_core::{
    analyze_process, evolve, evolve_with_rotated_eigenbases, forward_distribution, increments,
    make_density, quantum_mutual_information, random_density, random_unitary, thermal_state,
    von_neumann_entropy, BipartiteState, ComplexMatrix, MeasurementFrame, ProcessSpec,
    SupportFilter, Time, Tolerances,
};

/// Dimension triples (d_A, d_B, d_R) exercised by the random instances.
const DIMS: [(usize, usize, usize); 6] = [
    (2, 2, 1),
    (2, 2, 2),
    (3, 2, 1),
    (2, 3, 2),
    (2, 2, 4),
    (4, 2, 1),
];

fn build_spec(choice: usize, rank_raw: usize, beta: f64, seed: u64) -> ProcessSpec<f64> {
    let (d_a, d_b, d_r) = DIMS[choice % DIMS.len()];
    let d_ab = d_a * d_b;
    let rank = 1 + rank_raw % d_ab;
    let tol = Tolerances::default_profile();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let joint = random_density(d_ab, rank, &mut rng, &tol).expect("random density");
    let state = BipartiteState::new(d_a, d_b, joint, &tol).expect("partition");
    let energies: Vec<f64> = (0..d_r).map(|i| 0.8 * i as f64).collect();
    let hamiltonian = ComplexMatrix::from_real_diagonal(&energies);
    let unitary = random_unitary(d_ab * d_r, &mut rng);
    ProcessSpec::new(state, hamiltonian, beta, unitary, tol).expect("process spec")
}

fn build_frame(choice: usize, rank_raw: usize, beta: f64, seed: u64) -> MeasurementFrame<f64> {
    evolve(&build_spec(choice, rank_raw, beta, seed)).expect("evolve")
}

fn beta_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.01f64..2.5]
}

fn random_hermitian(dim: usize, rng: &mut ChaCha12Rng) -> ComplexMatrix<f64> {
    let g = random_unitary::<f64, _>(dim, rng);
    let scale = ComplexMatrix::from_real_diagonal(
        &(0..dim).map(|i| 1.0 + 0.3 * i as f64).collect::<Vec<_>>(),
    );
    // U D U† with a known real diagonal is Hermitian up to rounding; symmetrize
    // explicitly so the decomposition's input contract is met bitwise.
    let m = g.matmul(&scale).unwrap().matmul(&g.dagger()).unwrap();
    ComplexMatrix::from_fn(dim, dim, |i, j| {
        (m[(i, j)] + m[(j, i)].conj()) * Complex::new(0.5, 0.0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn eig_reconstructs_random_hermitian(dim in 2usize..6, seed in any::<u64>()) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let h = random_hermitian(dim, &mut rng);
        let tol = Tolerances::<f64>::default_profile();
        let eig = hermitian_eig(&h, &tol).unwrap();
        prop_assert!(eig.reconstruct().max_abs_diff(&h) <= 1e-10);
        prop_assert!(eig.orthonormality_deviation() <= 1e-12);
        for k in 1..dim {
            prop_assert!(eig.values[k - 1] >= eig.values[k]);
        }
    }

    #[test]
    fn eig_recovers_shuffled_diagonal(dim in 2usize..7, seed in any::<u64>()) {
        // A diagonal matrix must decompose exactly: eigenvalues are the sorted
        // diagonal entries and eigenvectors are computational axes.
        let mut entries: Vec<f64> = (0..dim).map(|i| 0.37 * (i + 1) as f64).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        for i in (1..dim).rev() {
            let j = (rand::Rng::random::<u64>(&mut rng) % (i as u64 + 1)) as usize;
            entries.swap(i, j);
        }
        let tol = Tolerances::<f64>::default_profile();
        let eig = hermitian_eig(&ComplexMatrix::from_real_diagonal(&entries), &tol).unwrap();
        let mut sorted = entries.clone();
        sorted.sort_by(|x, y| y.partial_cmp(x).unwrap());
        prop_assert_eq!(&eig.values, &sorted);
        prop_assert!(eig.orthonormality_deviation() <= 1e-14);
        prop_assert!(
            eig.reconstruct()
                .max_abs_diff(&ComplexMatrix::from_real_diagonal(&entries))
                <= 1e-14
        );
    }

    #[test]
    fn partial_trace_of_product_recovers_factors(
        d_a in 2usize..4,
        d_b in 2usize..4,
        seed in any::<u64>(),
    ) {
        let tol = Tolerances::<f64>::default_profile();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = random_density(d_a, d_a, &mut rng, &tol).unwrap();
        let b = random_density(d_b, d_b, &mut rng, &tol).unwrap();
        let joint = a.matrix().kron(b.matrix());
        let left = joint.partial_trace(d_a, d_b, Part::Left).unwrap();
        let right = joint.partial_trace(d_a, d_b, Part::Right).unwrap();
        prop_assert!(left.max_abs_diff(a.matrix()) <= 1e-12);
        prop_assert!(right.max_abs_diff(b.matrix()) <= 1e-12);
        prop_assert!((joint.trace().unwrap().re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn thermal_state_matches_gibbs_weights(
        dim in 1usize..6,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let energies: Vec<f64> = (0..dim)
            .map(|_| 3.0 * rand::Rng::random::<f64>(&mut rng))
            .collect();
        let tol = Tolerances::<f64>::default_profile();
        let state =
            thermal_state(&ComplexMatrix::from_real_diagonal(&energies), beta, &tol).unwrap();
        let z: f64 = energies.iter().map(|e| (-beta * e).exp()).sum();
        // The stored energy labels must stay aligned with the spectrum.
        let probabilities = state.density().probabilities();
        for (k, &energy) in state.energies().iter().enumerate() {
            prop_assert!(((-beta * energy).exp() / z - probabilities[k]).abs() <= 1e-12);
        }
        let total: f64 = probabilities.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn entropy_is_additive_on_products_and_information_is_nonnegative(
        d_a in 2usize..4,
        d_b in 2usize..4,
        rank_raw in 0usize..16,
        seed in any::<u64>(),
    ) {
        let tol = Tolerances::<f64>::default_profile();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = random_density(d_a, d_a, &mut rng, &tol).unwrap();
        let b = random_density(d_b, d_b, &mut rng, &tol).unwrap();
        let product = make_density(a.matrix().kron(b.matrix()), &tol).unwrap();
        let product = BipartiteState::new(d_a, d_b, product, &tol).unwrap();
        let sum = von_neumann_entropy(&a) + von_neumann_entropy(&b);
        prop_assert!((von_neumann_entropy(product.joint()) - sum).abs() <= 1e-9);
        prop_assert!(quantum_mutual_information(&product).abs() <= 1e-9);

        let rank = 1 + rank_raw % (d_a * d_b);
        let joint = random_density(d_a * d_b, rank, &mut rng, &tol).unwrap();
        let state = BipartiteState::new(d_a, d_b, joint, &tol).unwrap();
        prop_assert!(quantum_mutual_information(&state) >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn overlap_tables_are_doubly_stochastic(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let (d_ab, d_b) = (frame.d_ab(), frame.d_b());
        for time in [Time::Initial, Time::Final] {
            let table = frame.conditional_overlap(time);
            for m in 0..d_ab {
                let row: f64 = table[m * d_ab..(m + 1) * d_ab].iter().sum();
                prop_assert!((row - 1.0).abs() <= 1e-10);
            }
            for ab in 0..d_ab {
                let col: f64 = (0..d_ab).map(|m| table[m * d_ab + ab]).sum();
                prop_assert!((col - 1.0).abs() <= 1e-10);
                // Accessor agrees with the flat layout.
                let (a, b) = (ab / d_b, ab % d_b);
                prop_assert_eq!(frame.overlap(time, d_ab - 1, a, b), table[(d_ab - 1) * d_ab + ab]);
            }
        }
    }

    #[test]
    fn transition_kernel_is_doubly_stochastic_and_microreversible(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let spec = build_spec(choice, rank_raw, beta, seed);
        let frame = evolve(&spec).unwrap();
        let (d_ab, d_r) = (frame.d_ab(), frame.d_r());
        for m in 0..d_ab {
            for r in 0..d_r {
                let row: f64 = (0..d_ab)
                    .flat_map(|mf| (0..d_r).map(move |rf| (mf, rf)))
                    .map(|(mf, rf)| frame.kernel(m, r, mf, rf))
                    .sum();
                prop_assert!((row - 1.0).abs() <= 1e-10);
            }
        }
        for mf in 0..d_ab {
            for rf in 0..d_r {
                let col: f64 = (0..d_ab)
                    .flat_map(|m| (0..d_r).map(move |r| (m, r)))
                    .map(|(m, r)| frame.kernel(m, r, mf, rf))
                    .sum();
                prop_assert!((col - 1.0).abs() <= 1e-10);
            }
        }
        prop_assert!(frame.microreversibility_deviation(spec.unitary()) <= 1e-12);

        // The weighted transition table is the kernel scaled by the initial
        // joint-times-reservoir weights.
        let table = frame.transition_table();
        let p_m = frame.endpoint(Time::Initial).state.joint().probabilities();
        let p_r = frame.reservoir().density().probabilities();
        let d_total = d_ab * d_r;
        for m in 0..d_ab {
            for r in 0..d_r {
                for mf in 0..d_ab {
                    for rf in 0..d_r {
                        let got = table[(m * d_r + r) * d_total + (mf * d_r + rf)];
                        let want = p_m[m] * p_r[r] * frame.kernel(m, r, mf, rf);
                        prop_assert!((got - want).abs() <= 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn forward_distribution_normalizes_with_exact_marginals(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let full = forward_distribution(&frame, SupportFilter::Full);
        prop_assert!((full.total_forward - 1.0).abs() <= 1e-9);
        prop_assert!((full.total_reverse - 1.0).abs() <= 1e-9);

        // Summing the forward weight over all final outcomes must recover the
        // initial-tuple weight p_m · |<m|a,b>|² · p_r.
        let (d_ab, d_b, d_r) = (frame.d_ab(), frame.d_b(), frame.d_r());
        let p_m = frame.endpoint(Time::Initial).state.joint().probabilities();
        let p_r = frame.reservoir().density().probabilities();
        let mut by_start = vec![0.0f64; d_ab * d_ab * d_r];
        for t in &full.trajectories {
            let ab = t.idx.a * d_b + t.idx.b;
            by_start[(t.idx.m * d_ab + ab) * d_r + t.idx.r] += t.forward;
        }
        for m in 0..d_ab {
            for ab in 0..d_ab {
                for r in 0..d_r {
                    let want =
                        p_m[m] * frame.overlap(Time::Initial, m, ab / d_b, ab % d_b) * p_r[r];
                    prop_assert!((by_start[(m * d_ab + ab) * d_r + r] - want).abs() <= 1e-12);
                }
            }
        }

        let supported = forward_distribution(&frame, SupportFilter::SupportedOnly);
        prop_assert!((supported.total_forward - 1.0).abs() <= 1e-9);
        prop_assert_eq!(supported.support_size, supported.trajectories.len());
    }

    #[test]
    fn detailed_ratio_holds_and_increments_are_finite_on_support(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let ensemble = forward_distribution(&frame, SupportFilter::SupportedOnly);
        for t in &ensemble.trajectories {
            let inc = increments(&frame, t.idx).expect("finite increments on support");
            for value in [inc.delta_s_a, inc.delta_s_b, inc.delta_i, inc.delta_j, inc.beta_q] {
                prop_assert!(value.is_finite());
            }
            let sigma = inc.delta_s_a + inc.delta_s_b - inc.delta_i - inc.beta_q;
            let ratio = t.reverse / t.forward;
            prop_assert!((ratio - (-sigma).exp()).abs() <= 1e-12 * ratio.max(1.0));
        }
        let report = analyze_process(&frame).unwrap();
        prop_assert!(report.crooks_max_relative_residual <= 1e-12);
    }

    #[test]
    fn exponential_average_plus_off_support_reverse_mass_is_one(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let report = analyze_process(&frame).unwrap();
        prop_assert!((report.ift_value + report.reverse_mass_off_support - 1.0).abs() <= 1e-11);
        prop_assert!(report.reverse_mass_off_support >= -1e-15);
    }

    #[test]
    fn rank_preserving_processes_have_unit_exponential_average(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        // The average equals one exactly when the reverse distribution puts no
        // mass outside the forward support. A trivial reservoir cannot grow
        // the state's rank, and a full-rank state leaves no room to grow into.
        let (d_a, d_b, d_r) = DIMS[choice % DIMS.len()];
        let rank_choice = if d_r == 1 { rank_raw } else { d_a * d_b - 1 };
        let frame = build_frame(choice, rank_choice, beta, seed);
        let report = analyze_process(&frame).unwrap();
        prop_assert!(report.reverse_mass_off_support <= 1e-10);
        prop_assert!((report.ift_value - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn inequality_slack_equals_divergence_and_is_nonnegative(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let report = analyze_process(&frame).unwrap();
        prop_assert!((report.inequality_slack - report.kl_divergence).abs() <= 1e-9);
        prop_assert!(report.inequality_slack >= -1e-9);
        prop_assert!(report.kl_divergence >= -1e-12);
    }

    #[test]
    fn averages_match_density_matrix_functionals(
        choice in 0usize..6,
        rank_raw in 0usize..8,
        beta in beta_strategy(),
        seed in any::<u64>(),
    ) {
        let frame = build_frame(choice, rank_raw, beta, seed);
        let report = analyze_process(&frame).unwrap();
        prop_assert!((report.averages.delta_s_a - report.entropy_change_a).abs() <= 1e-9);
        prop_assert!((report.averages.delta_s_b - report.entropy_change_b).abs() <= 1e-9);
        prop_assert!((report.averages.delta_i - report.mutual_information_change).abs() <= 1e-9);

        // Recompute the functionals directly from the endpoint states.
        let initial = &frame.endpoint(Time::Initial).state;
        let evolved = &frame.endpoint(Time::Final).state;
        let ds_a = von_neumann_entropy(evolved.part_a()) - von_neumann_entropy(initial.part_a());
        let di = quantum_mutual_information(evolved) - quantum_mutual_information(initial);
        prop_assert!((report.entropy_change_a - ds_a).abs() <= 1e-12);
        prop_assert!((report.mutual_information_change - di).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn degenerate_joint_eigenspace_rotation_leaves_report_invariant(
        beta in beta_strategy(),
        basis_seed in any::<u64>(),
        unitary_seed in any::<u64>(),
        rotation_seed in any::<u64>(),
    ) {
        // A joint state with a doubly degenerate eigenvalue but generic
        // (non-degenerate) marginals: the choice of basis inside the joint
        // degenerate eigenspace must not affect any reported quantity.
        let tol = Tolerances::<f64>::default_profile();
        let weights = ComplexMatrix::from_real_diagonal(&[0.35, 0.35, 0.2, 0.1]);
        let mut basis_rng = ChaCha12Rng::seed_from_u64(basis_seed);
        let v = random_unitary::<f64, _>(4, &mut basis_rng);
        let joint = v.matmul(&weights).unwrap().matmul(&v.dagger()).unwrap();
        let state =
            BipartiteState::new(2, 2, make_density(joint, &tol).unwrap(), &tol).unwrap();
        let hamiltonian = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(unitary_seed);
        let unitary = random_unitary(8, &mut rng);
        let spec = ProcessSpec::new(state, hamiltonian, beta, unitary, tol).unwrap();

        let base = analyze_process(&evolve(&spec).unwrap()).unwrap();
        let mut rot_rng = ChaCha12Rng::seed_from_u64(rotation_seed);
        let rotated_frame = evolve_with_rotated_eigenbases(&spec, &mut rot_rng).unwrap();
        let rotated = analyze_process(&rotated_frame).unwrap();

        prop_assert!((base.total_forward - rotated.total_forward).abs() <= 1e-9);
        prop_assert!((base.ift_value - rotated.ift_value).abs() <= 1e-9);
        prop_assert!((base.inequality_slack - rotated.inequality_slack).abs() <= 1e-9);
        prop_assert!((base.kl_divergence - rotated.kl_divergence).abs() <= 1e-9);
        prop_assert!((base.averages.delta_s_a - rotated.averages.delta_s_a).abs() <= 1e-9);
        prop_assert!((base.averages.delta_s_b - rotated.averages.delta_s_b).abs() <= 1e-9);
        prop_assert!((base.averages.delta_i - rotated.averages.delta_i).abs() <= 1e-9);
        prop_assert!((base.averages.delta_j - rotated.averages.delta_j).abs() <= 1e-9);
        prop_assert!((base.averages.beta_q - rotated.averages.beta_q).abs() <= 1e-9);
    }

    #[test]
    fn degenerate_marginal_rotation_preserves_spectral_quantities(
        visibility in 0.1f64..0.9,
        beta in beta_strategy(),
        unitary_seed in any::<u64>(),
        rotation_seed in any::<u64>(),
    ) {
        // Mixing a maximally entangled state with white noise produces a
        // triply degenerate joint eigenvalue AND maximally mixed marginals.
        // Everything built from eigenvalues and operator functionals must be
        // rotation-invariant. The diagonal-outcome statistic is excluded: the
        // distribution <a,b|rho|a,b> genuinely depends on which product basis
        // is chosen inside a degenerate marginal eigenspace, so its average is
        // only defined relative to that choice.
        let tol = Tolerances::<f64>::default_profile();
        let bell = presets::bell_matrix::<f64>();
        let noise = 0.25 * (1.0 - visibility);
        let mixed = ComplexMatrix::from_fn(4, 4, |i, j| {
            let mut value = bell[(i, j)] * Complex::new(visibility, 0.0);
            if i == j {
                value += Complex::new(noise, 0.0);
            }
            value
        });
        let state =
            BipartiteState::new(2, 2, make_density(mixed, &tol).unwrap(), &tol).unwrap();
        let hamiltonian = ComplexMatrix::from_real_diagonal(&[0.0, 1.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(unitary_seed);
        let unitary = random_unitary(8, &mut rng);
        let spec = ProcessSpec::new(state, hamiltonian, beta, unitary, tol).unwrap();

        let base = analyze_process(&evolve(&spec).unwrap()).unwrap();
        let mut rot_rng = ChaCha12Rng::seed_from_u64(rotation_seed);
        let rotated_frame = evolve_with_rotated_eigenbases(&spec, &mut rot_rng).unwrap();
        let rotated = analyze_process(&rotated_frame).unwrap();

        prop_assert!((base.total_forward - rotated.total_forward).abs() <= 1e-9);
        prop_assert!((base.ift_value - rotated.ift_value).abs() <= 1e-9);
        prop_assert!((base.inequality_slack - rotated.inequality_slack).abs() <= 1e-9);
        prop_assert!((base.kl_divergence - rotated.kl_divergence).abs() <= 1e-9);
        prop_assert!((base.averages.delta_s_a - rotated.averages.delta_s_a).abs() <= 1e-9);
        prop_assert!((base.averages.delta_s_b - rotated.averages.delta_s_b).abs() <= 1e-9);
        prop_assert!((base.averages.delta_i - rotated.averages.delta_i).abs() <= 1e-9);
        prop_assert!((base.averages.beta_q - rotated.averages.beta_q).abs() <= 1e-9);
    }
}
