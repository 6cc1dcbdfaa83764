#![allow(dead_code)]

use intervention::finite_core::{FiniteInterventionGame, FiniteInterventionRule, MixedProfile};
use intervention::nash::NormalFormGame;
use intervention::space::ActionSpace;
use rand::Rng;

pub fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

pub fn distribution<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random game with full-support signals in which intervention action 0
/// never helps the manager.
pub fn random_game<R: Rng>(
    rng: &mut R,
    counts: &[usize],
    signals: usize,
    actions: usize,
) -> FiniteInterventionGame<f64> {
    let n = counts.len();
    let space = ActionSpace::new(counts.to_vec());
    let rho: Vec<Vec<f64>> = (0..space.len()).map(|_| distribution(rng, signals)).collect();
    let table: Vec<Vec<Vec<Vec<f64>>>> = (0..actions)
        .map(|a0| {
            (0..space.len())
                .map(|_| {
                    (0..signals)
                        .map(|_| {
                            let mut row: Vec<f64> = (0..=n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            if a0 == 0 {
                                row[0] += 3.0;
                            }
                            row
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    FiniteInterventionGame::from_fn(
        counts.iter().enumerate().map(|(i, &c)| labels(&format!("u{i}_"), c)).collect(),
        labels("d", actions),
        labels("y", signals),
        |a| rho[space.index(a)].clone(),
        |a0, a, y| table[a0][space.index(a)][y].clone(),
    )
    .unwrap()
    .with_no_intervention_action("d0")
    .unwrap()
}

pub fn random_rule<R: Rng>(rng: &mut R, signals: usize, actions: usize) -> FiniteInterventionRule<f64> {
    FiniteInterventionRule::new((0..signals).map(|_| distribution(rng, actions)).collect()).unwrap()
}

pub fn random_profile<R: Rng>(rng: &mut R, counts: &[usize]) -> MixedProfile<f64> {
    MixedProfile::new(counts.iter().map(|&c| distribution(rng, c)).collect()).unwrap()
}

pub fn random_normal_form<R: Rng>(rng: &mut R, counts: &[usize]) -> NormalFormGame<f64> {
    let space = ActionSpace::new(counts.to_vec());
    let payoffs = (0..counts.len()).map(|_| (0..space.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    NormalFormGame::new(counts.to_vec(), payoffs).unwrap()
}
