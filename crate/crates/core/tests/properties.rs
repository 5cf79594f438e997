use kitaev_core::bogoliubov::{diagonalize, Occupation};
use kitaev_core::hamiltonian::{dense_operator, majorana_form, QuadraticHamiltonian};
use kitaev_core::linalg::{self, c};
use kitaev_core::measure::CorrelationMatrix;
use kitaev_core::simulate::{correlation_from_statevector, run_noisy, NoiseModel, ShotCounts, StateVector};
use kitaev_core::synthesis::{prepare_eigenstate_circuit, Circuit};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_h(n: usize, seed: u64) -> QuadraticHamiltonian {
    QuadraticHamiltonian::random(n, &mut ChaCha8Rng::seed_from_u64(seed), 0.25).unwrap()
}

fn occupation(n: usize, x: usize) -> Occupation {
    Occupation::new((0..n).map(|j| x >> j & 1 == 1).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn majorana_form_round_trips(n in 1usize..=6, seed in any::<u64>()) {
        let h = random_h(n, seed);
        let back = majorana_form(&h).to_quadratic().unwrap();
        prop_assert!(linalg::max_abs(&(back.hermitian_part() - h.hermitian_part())) < 1e-10);
        prop_assert!(linalg::max_abs(&(back.pairing_part() - h.pairing_part())) < 1e-10);
        prop_assert!((back.constant() - h.constant()).abs() < 1e-10);
    }

    #[test]
    fn occupation_strings_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..12)) {
        let occ = Occupation::new(bits);
        let parsed: Occupation = occ.to_string().parse().unwrap();
        prop_assert_eq!(parsed, occ);
    }

    #[test]
    fn circuits_round_trip_through_json(n in 2usize..=5, seed in any::<u64>(), x in any::<usize>()) {
        let bt = diagonalize(&random_h(n, seed)).unwrap();
        let circuit = prepare_eigenstate_circuit(&bt, &occupation(n, x % (1 << n))).unwrap();
        let back: Circuit = serde_json::from_str(&serde_json::to_string(&circuit).unwrap()).unwrap();
        prop_assert_eq!(back, circuit);
    }

    #[test]
    fn correlation_matrices_round_trip_through_json(n in 1usize..=4, seed in any::<u64>(), x in any::<usize>()) {
        let bt = diagonalize(&random_h(n, seed)).unwrap();
        let circuit = prepare_eigenstate_circuit(&bt, &occupation(n, x % (1 << n))).unwrap();
        let g = correlation_from_statevector(&StateVector::zero(n).evolved(&circuit).unwrap()).unwrap();
        let back: CorrelationMatrix = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn shot_counts_round_trip_through_json(n in 1usize..=5, seed in any::<u64>()) {
        let bt = diagonalize(&random_h(n, seed)).unwrap();
        let circuit = prepare_eigenstate_circuit(&bt, &Occupation::vacuum(n)).unwrap();
        let noise = NoiseModel { p1q: 0.01, p2q: 0.05, p_idle: 0.01, readout: Vec::new() }.with_uniform_readout(0.02, 0.03);
        let counts = run_noisy(&circuit, 500, &noise, seed).unwrap();
        let back: ShotCounts = serde_json::from_str(&serde_json::to_string(&counts).unwrap()).unwrap();
        prop_assert_eq!(back, counts);
    }

    /// `a_j -> (-1)^j a_j` flips the sign of nearest-neighbour hopping and
    /// pairing without changing the spectrum.
    #[test]
    fn staggered_gauge_keeps_spectrum(n in 2usize..=5, seed in any::<u64>()) {
        let h = random_h(n, seed);
        let sign = |j: usize| if j.is_multiple_of(2) { 1.0 } else { -1.0 };
        let m = h.hermitian_part().map_with_location(|i, j, z| z * sign(i) * sign(j));
        let d = h.pairing_part().map_with_location(|i, j, z| z * sign(i) * sign(j));
        let g = QuadraticHamiltonian::new(m, d, h.constant()).unwrap();
        let a = linalg::eigvalsh(&dense_operator(&h).unwrap());
        let b = linalg::eigvalsh(&dense_operator(&g).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    /// A uniform pairing phase is removed by `a_j -> e^{i phi/2} a_j`.
    #[test]
    fn pairing_phase_keeps_spectrum(n in 2usize..=5, seed in any::<u64>(), phi in -3.0f64..3.0) {
        let h = random_h(n, seed);
        let g = QuadraticHamiltonian::new(
            h.hermitian_part().clone(),
            h.pairing_part() * c(phi.cos(), phi.sin()),
            h.constant(),
        )
        .unwrap();
        let a = diagonalize(&h).unwrap();
        let b = diagonalize(&g).unwrap();
        for (x, y) in a.energies().iter().zip(b.energies()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        prop_assert!((a.constant() - b.constant()).abs() < 1e-10);
    }
}
