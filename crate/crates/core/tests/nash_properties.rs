mod common;

use common::random_normal_form;
use intervention::nash::{mixed_nash_2p, pure_nash, verify_nash};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

#[test]
fn pure_equilibria_are_found_by_support_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for size in [2, 3] {
        for _ in 0..100 {
            let g = random_normal_form(&mut rng, &[size, size]);
            let pure = pure_nash(&g, TOL).pure_profiles();
            let mixed = mixed_nash_2p(&g, TOL).unwrap().pure_profiles();
            for p in &pure {
                assert!(mixed.contains(p), "{p:?} missing from {mixed:?}");
            }
        }
    }
}

#[test]
fn every_equilibrium_verifies() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let counts = [rng.gen_range(1..=4), rng.gen_range(1..=4)];
        let g = random_normal_form(&mut rng, &counts);
        let set = mixed_nash_2p(&g, TOL).unwrap();
        for profile in set.profiles() {
            assert!(verify_nash(&g, profile, TOL));
        }
        for profile in pure_nash(&g, TOL).profiles() {
            assert!(verify_nash(&g, profile, TOL));
        }
    }
    for _ in 0..50 {
        let g = random_normal_form(&mut rng, &[2, 3, 2]);
        for profile in pure_nash(&g, TOL).profiles() {
            assert!(verify_nash(&g, profile, TOL));
        }
    }
}

#[test]
fn random_bimatrix_games_have_an_equilibrium() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let counts = [rng.gen_range(1..=4), rng.gen_range(1..=4)];
        let g = random_normal_form(&mut rng, &counts);
        let set = mixed_nash_2p(&g, TOL).unwrap();
        assert!(!set.is_empty(), "{counts:?}");
        assert_eq!(set.skipped_supports, 0);
    }
}

#[test]
fn enumeration_order_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let g = random_normal_form(&mut rng, &[4, 4]);
        let a = mixed_nash_2p(&g, TOL).unwrap();
        let b = mixed_nash_2p(&g, TOL).unwrap();
        assert_eq!(a, b);
    }
}
