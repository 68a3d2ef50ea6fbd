mod common;

use common::{random_hermitian, random_mixed, random_pure, rng};
use cstomo::{
    dephased_ghz, fidelity, ghz_state, project_psd, purity, DensityMatrix, HermitianMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn random_state(d: usize, seed: u64) -> DensityMatrix {
    let mut r = rng(seed);
    let rank = r.random_range(1..=d);
    if rank == 1 {
        random_pure(d, &mut r)
    } else {
        random_mixed(d, rank, &mut r)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>(), two_qubits in any::<bool>()) {
        let d = if two_qubits { 4 } else { 2 };
        let a = random_state(d, seed);
        let b = random_state(d, seed ^ 0x9e37_79b9);
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-8, "{ab} vs {ba}");
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((fidelity(&a, &a).unwrap() - 1.0).abs() <= 1e-6);
        // Distinct random states are far apart and score visibly below one.
        if a.frobenius_distance(&b) > 1e-6 {
            prop_assert!(ab < 1.0 - 1e-9);
        }
    }

    #[test]
    fn project_psd_is_idempotent(seed in any::<u64>(), n in 1usize..=3) {
        let h = random_hermitian(1 << n, &mut rng(seed));
        let once = project_psd(&h).unwrap();
        let twice = project_psd(&once).unwrap();
        prop_assert!(once.frobenius_distance(&twice) <= 1e-10);
        prop_assert!(once.eigenvalues().unwrap()[0] >= -1e-12);
    }

    #[test]
    fn project_psd_fixes_states(seed in any::<u64>()) {
        let rho = random_state(4, seed).as_hermitian();
        prop_assert!(project_psd(&rho).unwrap().frobenius_distance(&rho) <= 1e-10);
    }

    #[test]
    fn ghz_has_four_half_entries(n in 1usize..=8) {
        let g = ghz_state(n).unwrap();
        let nonzero: Vec<Complex64> = g.matrix().iter().copied().filter(|z| z.norm() > 0.0).collect();
        prop_assert_eq!(nonzero.len(), 4);
        prop_assert!(nonzero.iter().all(|z| (*z - Complex64::new(0.5, 0.0)).norm() < 1e-15));
    }
}

#[test]
fn project_psd_beats_random_psd_candidates() {
    let mut r = rng(11);
    for _ in 0..5 {
        let h = random_hermitian(4, &mut r);
        let best = project_psd(&h).unwrap().frobenius_distance(&h);
        for _ in 0..1000 {
            let rank = r.random_range(1..=4);
            let scale = r.random_range(0.0..6.0);
            let cand = random_mixed(4, rank, &mut r).as_hermitian().scale(scale);
            assert!(best <= cand.frobenius_distance(&h) + 1e-12);
        }
    }
}

#[test]
fn dephased_purity_matches_direct_computation() {
    for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
        for n in [1, 2, 4] {
            let rho = dephased_ghz(n, lambda).unwrap();
            let m = rho.matrix();
            let direct = (m * m).trace().re;
            let formula = 0.5 + (1.0 - lambda) * (1.0 - lambda) / 2.0;
            assert!((purity(&rho) - direct).abs() < 1e-14);
            assert!((direct - formula).abs() < 1e-14);
        }
    }
}

#[test]
fn dephased_fidelity_follows_corner_block() {
    let g = ghz_state(4).unwrap();
    for lambda in [0.0, 0.3, 0.5, 0.9] {
        let f = fidelity(&dephased_ghz(4, lambda).unwrap(), &g).unwrap();
        assert!((f * f - (2.0 - lambda) / 2.0).abs() < 1e-9);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(dephased_ghz(2, -0.1).is_err());
    assert!(dephased_ghz(2, 1.5).is_err());
    let mut m = random_hermitian(2, &mut rng(1)).into_matrix();
    m[(0, 1)] += Complex64::new(1e-6, 0.0);
    assert!(HermitianMatrix::new(m).is_err());
    let not_psd = HermitianMatrix::new(nalgebra::DMatrix::from_diagonal(
        &nalgebra::DVector::from_vec(vec![Complex64::new(1.5, 0.0), Complex64::new(-0.5, 0.0)]),
    ))
    .unwrap();
    assert!(DensityMatrix::new(not_psd.into_matrix()).is_err());
}
