use std::sync::Arc;

use intervention::perfect_core::{
    affine_rate, default_profile_grid_step, extreme_rule, in_e_star, ContinuousGame, DerivativeSteps, GridOracle,
    PayoffFn,
};
use intervention::wireless_example::{fig6_data, v_star, WirelessParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINTS: usize = 6;

fn grid() -> Vec<f64> {
    (0..POINTS).map(|k| k as f64 / (POINTS - 1) as f64).collect()
}

/// Two users on `[0, 1]` with concave quadratic payoffs that intervention
/// lowers.
fn random_quadratic_game(rng: &mut ChaCha8Rng) -> ContinuousGame<f64> {
    let hi0 = rng.gen_range(0.0..2.0);
    let payoffs: Vec<PayoffFn<f64>> = (0..2)
        .map(|i| {
            let (alpha, m, beta, kappa) =
                (rng.gen_range(0.2..2.0), rng.gen_range(0.0..1.0), rng.gen_range(-0.8..0.8), rng.gen_range(0.1..2.0));
            Arc::new(move |a0: f64, a: &[f64]| {
                -alpha * (a[i] - m - beta * a[1 - i]).powi(2) - kappa * a0 * (1.0 + a[i] * a[i])
            }) as PayoffFn<f64>
        })
        .collect();
    ContinuousGame::new(vec![(0.0, 1.0); 2], (0.0, hi0), payoffs, Arc::new(|_, a: &[f64]| a[0] + a[1])).unwrap()
}

#[test]
fn profiles_sustained_by_any_rule_are_in_e_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let xs = grid();
    let oracle = GridOracle::finite(POINTS);
    let mut sustained_total = 0;
    for _ in 0..30 {
        let game = random_quadratic_game(&mut rng);
        let hi0 = game.intervention_bounds().1;
        let table: Vec<Vec<f64>> =
            (0..POINTS).map(|_| (0..POINTS).map(|_| rng.gen_range(0.0..=hi0)).collect()).collect();
        let payoff = |i: usize, k: [usize; 2]| game.user_payoff(i, table[k[0]][k[1]], &[xs[k[0]], xs[k[1]]]);
        for k1 in 0..POINTS {
            for k2 in 0..POINTS {
                let star = [k1, k2];
                let sustained = (0..2).all(|i| {
                    (0..POINTS).all(|d| {
                        let mut dev = star;
                        dev[i] = d;
                        payoff(i, star) >= payoff(i, dev) - 1e-12
                    })
                });
                if sustained {
                    sustained_total += 1;
                    assert!(in_e_star(&game, &[xs[k1], xs[k2]], &oracle), "({k1}, {k2})");
                }
            }
        }
    }
    assert!(sustained_total >= 10, "only {sustained_total} sustained profiles drawn");
}

#[test]
fn membership_agrees_with_scanning_the_extreme_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let xs = grid();
    let oracle = GridOracle::finite(POINTS);
    for _ in 0..10 {
        let game = random_quadratic_game(&mut rng);
        let lo0 = game.lowest_level();
        for &x in &xs {
            for &y in &xs {
                let target = [x, y];
                let rule = extreme_rule(&game, &target).unwrap();
                let resists = (0..2).all(|i| {
                    let base = game.user_payoff(i, lo0, &target);
                    xs.iter().filter(|&&d| d != target[i]).all(|&d| {
                        let mut a = target;
                        a[i] = d;
                        game.user_payoff(i, rule.evaluate(&a), &a) <= base + 1e-9
                    })
                });
                assert_eq!(in_e_star(&game, &target, &oracle), resists, "{target:?}");
            }
        }
    }
}

#[test]
fn e_star_expands_with_capability() {
    let axis: Vec<f64> = (0..=30).map(|k| k as f64 * 0.4).collect();
    let oracle = GridOracle::default();
    let mut previous: Option<Vec<bool>> = None;
    for a0 in [0.0, 0.1, 0.51, 5.0, 12.0] {
        let game = WirelessParams::reference(a0).unwrap().continuous_game().unwrap();
        let members: Vec<bool> = axis
            .iter()
            .flat_map(|&x| axis.iter().map(move |&y| [x, y]))
            .map(|a| in_e_star(&game, &a, &oracle))
            .collect();
        if let Some(prev) = &previous {
            assert!(prev.iter().zip(&members).all(|(&p, &m)| !p || m), "shrank at {a0}");
        }
        previous = Some(members);
    }
    assert!(previous.unwrap().iter().all(|&m| m));
}

#[test]
fn closed_form_and_numeric_membership_agree_off_the_boundary() {
    let axis: Vec<f64> = (0..=60).map(|k| 12.0 * k as f64 / 60.0).collect();
    for a0 in [0.0, 0.1, 0.51, 5.0] {
        let params = WirelessParams::reference(a0).unwrap();
        let game = params.continuous_game().unwrap();
        // Punishment by full intervention is found numerically here.
        let numeric = GridOracle::default();
        let mut compared = 0;
        for &x in &axis {
            for &y in &axis {
                let a = [x, y];
                if params.e_star_margin(&a).abs() < 1e-6 {
                    continue;
                }
                assert_eq!(params.in_e_star_closed_form(&a), in_e_star(&game, &a, &numeric), "{a:?} at {a0}");
                compared += 1;
            }
        }
        assert!(compared > 2000, "{compared}");
    }
}

#[test]
fn rates_match_the_symbolic_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let steps = DerivativeSteps::default();
    for _ in 0..30 {
        let n = rng.gen_range(2..=4);
        let target: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..2.5)).collect();
        let total: f64 = target.iter().sum();
        // Keep quality positive over the whole intervention range.
        let a0_max = rng.gen_range(0.1..(12.0 - total).min(3.0));
        let params = WirelessParams::symmetric(n, 12.0, 1.0, 12.0, a0_max).unwrap();
        let rates = affine_rate(&params.continuous_game().unwrap(), &target, &steps).unwrap();
        for (i, &c) in rates.iter().enumerate() {
            let exact = params.c_star(i, &target);
            assert!((c - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{c} vs {exact}");
        }
    }
}

#[test]
fn capability_threshold_is_increasing_and_concave_in_n() {
    let t: Vec<f64> = (2..=20).map(|n| WirelessParams::symmetric(n, 12.0, 1.0, 12.0, 0.0).unwrap().a0_min()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert!(t.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] <= 0.0));
}

#[test]
fn efficient_profile_is_sustainable_exactly_above_threshold() {
    for n in [2usize, 3, 4] {
        let base = WirelessParams::symmetric(n, 12.0, 1.0, 12.0, 0.0).unwrap();
        let threshold = base.a0_min();
        let target = vec![base.a_low(); n];
        for factor in [0.0_f64, 0.5, 0.99, 0.9999, 1.0001, 1.01, 2.0, 10.0] {
            let a0 = threshold * factor;
            let p = base.with_a0_max(a0).unwrap();
            let expected = a0 >= threshold;
            assert_eq!(p.in_e_star_closed_form(&target), expected, "N={n} a0={a0}");
            let game = p.continuous_game().unwrap();
            if (factor - 1.0).abs() > 1e-3 {
                assert_eq!(in_e_star(&game, &target, &GridOracle::default()), expected, "N={n} a0={a0}");
            }
        }
    }
}

#[test]
fn searched_optimum_matches_a_fine_brute_force() {
    let axis: Vec<f64> = (0..=1200).map(|k| 12.0 * k as f64 / 1200.0).collect();
    for a0 in [0.1, 0.3, 0.45] {
        let params = WirelessParams::reference(a0).unwrap();
        let mut brute = f64::NEG_INFINITY;
        for &x in &axis {
            for &y in &axis {
                if params.in_e_star_closed_form(&[x, y]) {
                    brute = brute.max(params.manager_payoff(0.0, &[x, y]));
                }
            }
        }
        let searched = v_star(&params, default_profile_grid_step(2)).unwrap().value;
        assert!(searched >= brute - 1e-9, "{searched} < {brute}");
        assert!(searched - brute < 5e-3, "{searched} vs {brute}");
        // Smallest symmetric usage x with (12 - 2x) x = (12 - a0 - x)^2 / 4,
        // the smaller root of 9x^2 - (48 + 2c) x + c^2 = 0 with c = 12 - a0.
        // Refinement stops at a step of 1e-6 of the interval, worth ~1e-4 here.
        let c = 12.0 - a0;
        let (qa, qb, qc) = (9.0, -(48.0 + 2.0 * c), c * c);
        let x = (-qb - (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa);
        let exact = (12.0 - 2.0 * x) * x;
        assert!((searched - exact).abs() < 1e-4, "{searched} vs {exact}");
    }
}

#[test]
fn small_capability_already_beats_no_intervention() {
    let eps = 1e-3;
    for a0 in [0.01, 0.05, 0.2] {
        let p = WirelessParams::reference(a0).unwrap();
        let a_h = p.a_high();
        let profile = [a_h - eps, a_h - eps];
        assert!(p.in_e_star_closed_form(&profile), "{a0}");
        assert!(p.manager_payoff(0.0, &profile) > p.benchmarks().v_tilde);
    }
}

#[test]
fn affine_rule_payoff_curve_peaks_at_the_efficient_level() {
    let p = WirelessParams::reference(12.0).unwrap();
    let xs: Vec<f64> = (0..=240).map(|k| k as f64 * 0.05).collect();
    let rows = fig6_data(&p, &xs).unwrap();
    let argmax = |f: fn(&intervention::wireless_example::Fig6Row) -> f64| {
        rows.iter().max_by(|a, b| f(a).partial_cmp(&f(b)).unwrap()).unwrap().a_i
    };
    assert!((argmax(|r| r.u_with_rule) - 3.0).abs() <= 0.05);
    assert!((argmax(|r| r.u_no_intervention) - 4.5).abs() <= 0.05);
    let after: Vec<f64> = rows.iter().filter(|r| r.a_i >= 3.0).map(|r| r.u_with_rule).collect();
    assert!(after.windows(2).all(|w| w[1] <= w[0] + 1e-12));
}
