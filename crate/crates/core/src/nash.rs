//! Nash equilibria of normal-form games.
//!
//! Pure equilibria are found by exhaustive enumeration for any number of
//! players. For two players, support enumeration solves the indifference
//! system on every pair of equal-size supports and keeps the solutions that
//! survive the best-response check; this finds every equilibrium of a
//! nondegenerate game. Supports whose system is singular are skipped and
//! counted in [`EquilibriumSet::skipped_supports`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::finite_core::MixedProfile;
use crate::linalg;
use crate::scalar::Scalar;
use crate::space::ActionSpace;

/// Two equilibria closer than this in the sup norm are the same equilibrium.
pub const DEDUP_DISTANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFormGame<T> {
    space: ActionSpace,
    // one flattened tensor per player, indexed by `space`
    payoffs: Vec<Vec<T>>,
}

impl<T: Scalar> NormalFormGame<T> {
    pub fn new(action_counts: Vec<usize>, payoffs: Vec<Vec<T>>) -> Result<Self> {
        if action_counts.is_empty() || action_counts.contains(&0) {
            return Err(Error::Shape("every player needs at least one action".into()));
        }
        let space = ActionSpace::new(action_counts);
        if payoffs.len() != space.num_players() {
            return Err(Error::Shape(format!("{} payoff tensors for {} players", payoffs.len(), space.num_players())));
        }
        for (i, t) in payoffs.iter().enumerate() {
            if t.len() != space.len() {
                return Err(Error::Shape(format!(
                    "payoff tensor of player {i} has {} entries, expected {}",
                    t.len(),
                    space.len()
                )));
            }
            if t.iter().any(|x| !x.is_finite()) {
                return Err(Error::Shape(format!("payoff tensor of player {i} has non-finite entries")));
            }
        }
        Ok(Self { space, payoffs })
    }

    /// Two-player game from row-player and column-player matrices.
    pub fn bimatrix(row: Vec<Vec<T>>, col: Vec<Vec<T>>) -> Result<Self> {
        let m = row.len();
        let n = row.first().map(Vec::len).unwrap_or(0);
        if col.len() != m || row.iter().chain(&col).any(|r| r.len() != n) {
            return Err(Error::Shape("bimatrix payoff matrices must share one shape".into()));
        }
        Self::new(vec![m, n], vec![row.concat(), col.concat()])
    }

    pub fn num_players(&self) -> usize {
        self.space.num_players()
    }

    pub fn action_counts(&self) -> &[usize] {
        self.space.counts()
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn payoff(&self, player: usize, profile: usize) -> T {
        self.payoffs[player][profile]
    }

    pub fn tensor(&self, player: usize) -> &[T] {
        &self.payoffs[player]
    }

    pub fn expected_payoff(&self, player: usize, profile: &MixedProfile<T>) -> T {
        profile.weights(&self.space).into_iter().zip(&self.payoffs[player]).map(|(w, &u)| w * u).sum()
    }

    /// Payoff to `player` of each of its pure actions against the others'
    /// mixtures in `profile`.
    pub fn deviation_payoffs(&self, player: usize, profile: &MixedProfile<T>) -> Vec<T> {
        let mut out = vec![T::zero(); self.space.counts()[player]];
        for idx in 0..self.space.len() {
            let a = self.space.profile(idx);
            let w = a
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != player)
                .fold(T::one(), |w, (j, &aj)| w * profile.user(j)[aj]);
            if w != T::zero() {
                out[a[player]] = out[a[player]] + w * self.payoffs[player][idx];
            }
        }
        out
    }

    /// Largest gain any player gets from a unilateral pure deviation.
    pub fn max_regret(&self, profile: &MixedProfile<T>) -> T {
        (0..self.num_players())
            .map(|i| {
                let dev = self.deviation_payoffs(i, profile);
                let value: T = dev.iter().zip(profile.user(i)).map(|(&u, &p)| u * p).sum();
                dev.into_iter().fold(T::neg_infinity(), T::max) - value
            })
            .fold(T::neg_infinity(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium<T> {
    pub profile: MixedProfile<T>,
    pub pure: bool,
}

/// Equilibria found by a solver, in deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSet<T> {
    pub equilibria: Vec<Equilibrium<T>>,
    pub tolerance: T,
    /// Supports skipped because their indifference system was singular.
    /// Nonzero means a degenerate game whose equilibria may be under-reported.
    pub skipped_supports: usize,
}

impl<T: Scalar> EquilibriumSet<T> {
    pub fn len(&self) -> usize {
        self.equilibria.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equilibria.is_empty()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &MixedProfile<T>> {
        self.equilibria.iter().map(|e| &e.profile)
    }

    pub fn pure_profiles(&self) -> Vec<Vec<usize>> {
        self.equilibria.iter().filter_map(|e| e.profile.as_pure()).collect()
    }

    fn push_unique(&mut self, profile: MixedProfile<T>) {
        let d = T::lit(DEDUP_DISTANCE);
        if self.equilibria.iter().all(|e| e.profile.linf_distance(&profile) >= d) {
            let pure = profile.as_pure().is_some();
            self.equilibria.push(Equilibrium { profile, pure });
        }
    }
}

/// Whether `profile` is a Nash equilibrium up to `tolerance`; pure deviations
/// suffice because payoffs are multilinear.
pub fn verify_nash<T: Scalar>(g: &NormalFormGame<T>, profile: &MixedProfile<T>, tolerance: T) -> bool {
    if profile.num_users() != g.num_players()
        || profile.per_user().iter().map(Vec::len).ne(g.action_counts().iter().copied())
    {
        return false;
    }
    g.max_regret(profile) <= tolerance
}

/// All pure profiles from which no player gains more than `tolerance` by a
/// unilateral deviation, in lexicographic order.
pub fn pure_nash<T: Scalar>(g: &NormalFormGame<T>, tolerance: T) -> EquilibriumSet<T> {
    let space = &g.space;
    let equilibria = (0..space.len())
        .filter(|&idx| {
            (0..g.num_players()).all(|i| {
                let current = g.payoffs[i][idx];
                (0..space.counts()[i]).all(|k| g.payoffs[i][space.with_action(idx, i, k)] <= current + tolerance)
            })
        })
        .map(|idx| Equilibrium { profile: MixedProfile::pure(space.counts(), &space.profile(idx)), pure: true })
        .collect();
    EquilibriumSet { equilibria, tolerance, skipped_supports: 0 }
}

/// Nonempty subsets of `0..n` ordered by size, then lexicographically.
fn supports(n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> =
        (1u32..(1 << n)).map(|mask| (0..n).filter(|k| mask & (1 << k) != 0).collect()).collect();
    out.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Mixture over `own` actions (length `len`) that makes the opponent
/// indifferent across `opp_support`. `payoff(own, opp)` is the opponent's
/// payoff.
fn indifference_mix<T: Scalar>(
    own_support: &[usize],
    opp_support: &[usize],
    len: usize,
    payoff: impl Fn(usize, usize) -> T,
) -> Option<Vec<T>> {
    let k = own_support.len();
    // unknowns: the k probabilities, then the common value
    let mut m = Vec::with_capacity(k + 1);
    let mut rhs = Vec::with_capacity(k + 1);
    for &opp in opp_support {
        let mut row: Vec<T> = own_support.iter().map(|&own| payoff(own, opp)).collect();
        row.push(-T::one());
        m.push(row);
        rhs.push(T::zero());
    }
    let mut sum_row = vec![T::one(); k];
    sum_row.push(T::zero());
    m.push(sum_row);
    rhs.push(T::one());

    let sol = linalg::solve(m, rhs)?;
    let mut mix = vec![T::zero(); len];
    for (&a, &p) in own_support.iter().zip(&sol) {
        mix[a] = p;
    }
    Some(mix)
}

enum SupportOutcome<T> {
    Singular,
    Rejected,
    Found(MixedProfile<T>),
}

/// All equilibria of a two-player game found by support enumeration.
pub fn mixed_nash_2p<T: Scalar>(g: &NormalFormGame<T>, tolerance: T) -> Result<EquilibriumSet<T>> {
    if g.num_players() != 2 {
        return Err(Error::PlayerCount { expected: 2, actual: g.num_players() });
    }
    let (m, n) = (g.action_counts()[0], g.action_counts()[1]);
    let row = |i: usize, j: usize| g.payoffs[0][i * n + j];
    let col = |i: usize, j: usize| g.payoffs[1][i * n + j];

    let rows = supports(m);
    let cols = supports(n);
    let pairs: Vec<(&Vec<usize>, &Vec<usize>)> =
        rows.iter().flat_map(|s1| cols.iter().filter(|s2| s2.len() == s1.len()).map(move |s2| (s1, s2))).collect();

    let outcomes: Vec<SupportOutcome<T>> = pairs
        .par_iter()
        .map(|(s1, s2)| {
            // The row player's mixture makes the column player indifferent on s2.
            let x = indifference_mix(s1, s2, m, col);
            let y = indifference_mix(s2, s1, n, |own, opp| row(opp, own));
            let (Some(x), Some(y)) = (x, y) else {
                return SupportOutcome::Singular;
            };
            let neg = -tolerance;
            if x.iter().chain(&y).any(|&p| p < neg) {
                return SupportOutcome::Rejected;
            }
            let clean = |v: Vec<T>| -> Option<Vec<T>> {
                let v: Vec<T> = v.into_iter().map(|p| p.max(T::zero())).collect();
                let s: T = v.iter().copied().sum();
                (s > T::zero()).then(|| v.into_iter().map(|p| p / s).collect())
            };
            let (Some(x), Some(y)) = (clean(x), clean(y)) else {
                return SupportOutcome::Rejected;
            };
            let Ok(profile) = MixedProfile::new(vec![x, y]) else {
                return SupportOutcome::Rejected;
            };
            if verify_nash(g, &profile, tolerance) {
                SupportOutcome::Found(profile)
            } else {
                SupportOutcome::Rejected
            }
        })
        .collect();

    let mut set = EquilibriumSet { equilibria: Vec::new(), tolerance, skipped_supports: 0 };
    for outcome in outcomes {
        match outcome {
            SupportOutcome::Singular => set.skipped_supports += 1,
            SupportOutcome::Rejected => {}
            SupportOutcome::Found(p) => set.push_unique(p),
        }
    }
    // 1x1 supports are never singular, so this only matters for equilibria
    // lost to tolerance effects on the larger systems.
    for e in pure_nash(g, tolerance).equilibria {
        set.push_unique(e.profile);
    }
    Ok(set)
}
