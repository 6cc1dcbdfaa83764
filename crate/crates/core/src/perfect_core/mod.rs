//! Perfect monitoring with interval action spaces.
//!
//! The device observes the exact action profile and picks a level `a_0` in
//! `[lo_0, hi_0]`, where `lo_0` is the mildest intervention: every user
//! weakly prefers it at every profile. A profile `a*` is sustainable by some
//! rule exactly when it is sustained by its extreme rule, which applies
//! `lo_0` on target and the deviator's worst level after any unilateral
//! deviation. The set of such profiles is `E*`, and the manager's best
//! outcome is the maximum of `u_0(lo_0, .)` over `E*`.

mod affine;
mod search;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{linspace, Scalar};
use crate::simplex;
use crate::space::ActionSpace;

pub use affine::{
    affine_rate, affine_sustains_check, AffineReport, AffineRule, ConditionCheck, DerivativeSteps, UserConditions,
};

/// `u(a_0, a)` for one participant.
pub type PayoffFn<T> = Arc<dyn Fn(T, &[T]) -> T + Send + Sync>;
/// `punishment(i, a)`: the level applied when user `i` deviates alone to `a`.
pub type PunishmentFn<T> = Arc<dyn Fn(usize, &[T]) -> T + Send + Sync>;

/// Additive slack in the membership test for `E*`.
pub const E_STAR_TOLERANCE: f64 = 1e-9;
/// Points per user in the default deviation oracle's grid.
pub const DEFAULT_ORACLE_POINTS: usize = 2001;
const ASSUMPTION_GRID: usize = 5;

#[derive(Clone)]
pub struct ContinuousGame<T> {
    user_bounds: Vec<(T, T)>,
    intervention_bounds: (T, T),
    user_payoffs: Vec<PayoffFn<T>>,
    manager_payoff: PayoffFn<T>,
    punishment: Option<PunishmentFn<T>>,
}

impl<T: fmt::Debug> fmt::Debug for ContinuousGame<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousGame")
            .field("user_bounds", &self.user_bounds)
            .field("intervention_bounds", &self.intervention_bounds)
            .field("punishment_override", &self.punishment.is_some())
            .finish_non_exhaustive()
    }
}

impl<T: Scalar> ContinuousGame<T> {
    /// Builds the game and spot-checks on a `5^(N+1)` grid that the lowest
    /// intervention level is weakly best for every user at every profile.
    pub fn new(
        user_bounds: Vec<(T, T)>,
        intervention_bounds: (T, T),
        user_payoffs: Vec<PayoffFn<T>>,
        manager_payoff: PayoffFn<T>,
    ) -> Result<Self> {
        if user_bounds.is_empty() {
            return Err(Error::Params("a continuous game needs at least one user".into()));
        }
        if user_payoffs.len() != user_bounds.len() {
            return Err(Error::Shape(format!(
                "{} payoff functions for {} users",
                user_payoffs.len(),
                user_bounds.len()
            )));
        }
        for (i, &(lo, hi)) in user_bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Params(format!("user {} interval [{lo}, {hi}] must have lo < hi", i + 1)));
            }
        }
        let (lo0, hi0) = intervention_bounds;
        if !(lo0.is_finite() && hi0.is_finite() && lo0 <= hi0) {
            return Err(Error::Params(format!("intervention interval [{lo0}, {hi0}] must have lo <= hi")));
        }
        let game = Self { user_bounds, intervention_bounds, user_payoffs, manager_payoff, punishment: None };
        game.check_mildest_level_preferred()?;
        Ok(game)
    }

    /// Replaces the numerical minimization of `u_i` over intervention levels
    /// with a known answer.
    pub fn with_punishment(mut self, punishment: PunishmentFn<T>) -> Self {
        self.punishment = Some(punishment);
        self
    }

    fn check_mildest_level_preferred(&self) -> Result<()> {
        let n = self.num_users();
        let axes: Vec<Vec<T>> = self.user_bounds.iter().map(|&(lo, hi)| linspace(lo, hi, ASSUMPTION_GRID)).collect();
        let levels = self.levels(ASSUMPTION_GRID);
        let space = ActionSpace::new(vec![ASSUMPTION_GRID; n]);
        for idx in 0..space.len() {
            let a: Vec<T> = space.profile(idx).iter().enumerate().map(|(i, &k)| axes[i][k]).collect();
            let manager = self.manager_payoff(self.intervention_bounds.0, &a);
            if !manager.is_finite() {
                return Err(Error::Params(format!("manager payoff is not finite at {a:?}")));
            }
            for i in 0..n {
                let base = self.user_payoff(i, self.intervention_bounds.0, &a);
                for &a0 in &levels {
                    let u = self.user_payoff(i, a0, &a);
                    if !(u.is_finite() && base.is_finite()) {
                        return Err(Error::Params(format!("payoff of user {} is not finite at ({a0}, {a:?})", i + 1)));
                    }
                    if u > base + T::tol(1e-9) * T::one().max(base.abs()) {
                        return Err(Error::Params(format!(
                            "user {} prefers intervention level {a0} to the lowest level at {a:?}",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn levels(&self, points: usize) -> Vec<T> {
        let (lo, hi) = self.intervention_bounds;
        if lo == hi {
            vec![lo]
        } else {
            linspace(lo, hi, points)
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_bounds.len()
    }

    pub fn user_bounds(&self, user: usize) -> (T, T) {
        self.user_bounds[user]
    }

    pub fn intervention_bounds(&self) -> (T, T) {
        self.intervention_bounds
    }

    pub fn lowest_level(&self) -> T {
        self.intervention_bounds.0
    }

    /// `u_i(a_0, a)` with users numbered from 0.
    pub fn user_payoff(&self, user: usize, a0: T, profile: &[T]) -> T {
        (self.user_payoffs[user])(a0, profile)
    }

    pub fn manager_payoff(&self, a0: T, profile: &[T]) -> T {
        (self.manager_payoff)(a0, profile)
    }

    pub fn contains(&self, profile: &[T]) -> bool {
        profile.len() == self.num_users()
            && profile.iter().zip(&self.user_bounds).all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }

    fn check_profile(&self, profile: &[T]) -> Result<()> {
        if self.contains(profile) {
            Ok(())
        } else {
            Err(Error::Params(format!("profile {profile:?} lies outside the action box")))
        }
    }

    /// An intervention level minimizing `u_i(., a)`. Golden-section search
    /// after a coarse scan; both endpoints are always compared and ties go to
    /// the higher level.
    pub fn punishment(&self, user: usize, profile: &[T]) -> T {
        if let Some(p) = &self.punishment {
            return p(user, profile);
        }
        let (lo, hi) = self.intervention_bounds;
        if lo == hi {
            return lo;
        }
        let u = |a0: T| self.user_payoff(user, a0, profile);
        let xs = linspace(lo, hi, 17);
        let values: Vec<T> = xs.iter().map(|&x| u(x)).collect();
        let mut k = xs.len() - 1;
        for j in (0..xs.len()).rev() {
            if values[j] < values[k] {
                k = j;
            }
        }
        let bracket = T::tol(1e-8) * T::one().max(hi - lo);
        let inner = search::golden_max(|x| -u(x), xs[k.saturating_sub(1)], xs[(k + 1).min(xs.len() - 1)], bracket);
        let mut best = (hi, u(hi));
        for x in [inner, xs[k], lo] {
            let v = u(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        best.0
    }

    /// `u_i` after user `i` moves alone to `x` and is punished for it.
    pub fn punished_payoff(&self, user: usize, x: T, profile: &[T]) -> T {
        let mut a = profile.to_vec();
        a[user] = x;
        self.user_payoff(user, self.punishment(user, &a), &a)
    }
}

/// Rule targeting `target`: the lowest level on target and after joint
/// deviations, the deviator's punishment after a unilateral one.
#[derive(Clone, Debug)]
pub struct ExtremeRule<T> {
    game: ContinuousGame<T>,
    target: Vec<T>,
}

impl<T: Scalar> ExtremeRule<T> {
    pub fn target(&self) -> &[T] {
        &self.target
    }

    /// The user deviating alone from the target, if exactly one does.
    pub fn lone_deviator(&self, profile: &[T]) -> Option<usize> {
        let mut deviators = profile.iter().zip(&self.target).enumerate().filter(|(_, (a, t))| a != t);
        match (deviators.next(), deviators.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    pub fn evaluate(&self, profile: &[T]) -> T {
        match self.lone_deviator(profile) {
            Some(i) => self.game.punishment(i, profile),
            None => self.game.lowest_level(),
        }
    }
}

pub fn extreme_rule<T: Scalar>(game: &ContinuousGame<T>, target: &[T]) -> Result<ExtremeRule<T>> {
    game.check_profile(target)?;
    Ok(ExtremeRule { game: game.clone(), target: target.to_vec() })
}

/// The best payoff user `i` can get by deviating alone from `profile` and
/// being punished for it.
pub trait DeviationOracle<T: Scalar>: Sync {
    fn best_deviation(&self, game: &ContinuousGame<T>, user: usize, profile: &[T]) -> T;
}

impl<T: Scalar, F> DeviationOracle<T> for F
where
    F: Fn(&ContinuousGame<T>, usize, &[T]) -> T + Sync,
{
    fn best_deviation(&self, game: &ContinuousGame<T>, user: usize, profile: &[T]) -> T {
        self(game, user, profile)
    }
}

/// Scans a uniform grid over the user's interval, optionally refining the
/// best grid point by golden-section search between its neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridOracle {
    pub points: usize,
    pub refine: bool,
}

impl Default for GridOracle {
    fn default() -> Self {
        Self { points: DEFAULT_ORACLE_POINTS, refine: true }
    }
}

impl GridOracle {
    /// Deviations restricted to the grid points themselves.
    pub fn finite(points: usize) -> Self {
        Self { points, refine: false }
    }
}

impl<T: Scalar> DeviationOracle<T> for GridOracle {
    fn best_deviation(&self, game: &ContinuousGame<T>, user: usize, profile: &[T]) -> T {
        let (lo, hi) = game.user_bounds(user);
        let xs = linspace(lo, hi, self.points.max(2));
        let values: Vec<T> = xs.iter().map(|&x| game.punished_payoff(user, x, profile)).collect();
        let mut k = 0;
        for j in 1..xs.len() {
            if values[j] > values[k] {
                k = j;
            }
        }
        let mut best = values[k];
        if self.refine {
            let bracket = T::tol(1e-10) * T::one().max(hi - lo);
            let x = search::golden_max(
                |x| game.punished_payoff(user, x, profile),
                xs[k.saturating_sub(1)],
                xs[(k + 1).min(xs.len() - 1)],
                bracket,
            );
            best = best.max(game.punished_payoff(user, x, profile));
        }
        best
    }
}

/// `min_i [u_i(lo_0, a) - best deviation_i]`; nonnegative on `E*`.
pub fn e_star_margin<T: Scalar>(game: &ContinuousGame<T>, profile: &[T], oracle: &dyn DeviationOracle<T>) -> T {
    (0..game.num_users())
        .map(|i| game.user_payoff(i, game.lowest_level(), profile) - oracle.best_deviation(game, i, profile))
        .fold(T::infinity(), T::min)
}

pub fn in_e_star<T: Scalar>(game: &ContinuousGame<T>, profile: &[T], oracle: &dyn DeviationOracle<T>) -> bool {
    game.contains(profile) && e_star_margin(game, profile, oracle) >= -T::lit(E_STAR_TOLERANCE)
}

/// Grid step, as a fraction of each user's interval, giving 61 points per
/// user for two users and 21 for more.
pub fn default_profile_grid_step<T: Scalar>(num_users: usize) -> T {
    if num_users <= 2 {
        T::one() / T::lit(60.0)
    } else {
        T::one() / T::lit(20.0)
    }
}

#[derive(Clone, Debug)]
pub struct PerfectEquilibrium<T> {
    pub rule: ExtremeRule<T>,
    pub profile: Vec<T>,
    pub value: T,
    /// Set when no grid profile was in `E*` and the result is a Nash
    /// equilibrium of the game without intervention.
    pub fallback: bool,
}

struct ProfileGrid<T> {
    axes: Vec<Vec<T>>,
    space: ActionSpace,
}

impl<T: Scalar> ProfileGrid<T> {
    fn new(game: &ContinuousGame<T>, step: T) -> Result<Self> {
        let n = simplex::divisions_for_step(step)?;
        let axes: Vec<Vec<T>> = (0..game.num_users())
            .map(|i| {
                let (lo, hi) = game.user_bounds(i);
                linspace(lo, hi, n + 1)
            })
            .collect();
        let space = ActionSpace::new(vec![n + 1; game.num_users()]);
        Ok(Self { axes, space })
    }

    fn point(&self, idx: usize) -> Vec<T> {
        self.space.profile(idx).iter().enumerate().map(|(i, &k)| self.axes[i][k]).collect()
    }
}

fn value_tol<T: Scalar>(v: T) -> T {
    T::tol(1e-12) * T::one().max(v.abs())
}

/// Maximizes `u_0(lo_0, .)` over grid profiles in `E*`, then refines by a
/// local lattice search that stays in `E*` without slack, halving the step
/// down to `1e-6` of each interval. Ties go to the lexicographically smallest
/// grid profile.
pub fn intervention_equilibrium<T: Scalar>(
    game: &ContinuousGame<T>,
    profile_grid_step: T,
    oracle: &dyn DeviationOracle<T>,
) -> Result<PerfectEquilibrium<T>> {
    let grid = ProfileGrid::new(game, profile_grid_step)?;
    let lo0 = game.lowest_level();
    let values: Vec<T> =
        (0..grid.space.len()).into_par_iter().map(|idx| game.manager_payoff(lo0, &grid.point(idx))).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));

    let mut found: Option<usize> = None;
    for chunk in order.chunks(256) {
        let members: Vec<usize> = chunk
            .par_iter()
            .copied()
            .filter(|&idx| {
                if let Some(f) = found {
                    if values[idx] < values[f] - value_tol(values[f]) {
                        return false;
                    }
                }
                in_e_star(game, &grid.point(idx), oracle)
            })
            .collect();
        for idx in members {
            found = Some(match found {
                None => idx,
                Some(f) if values[idx] >= values[f] - value_tol(values[f]) => f.min(idx),
                Some(f) => f,
            });
        }
        if let (Some(f), Some(&last)) = (found, chunk.last()) {
            if values[last] < values[f] - value_tol(values[f]) {
                break;
            }
        }
    }

    let Some(start) = found else {
        let profile = no_intervention_nash(game, oracle)?;
        let value = game.manager_payoff(lo0, &profile);
        return Ok(PerfectEquilibrium { rule: extreme_rule(game, &profile)?, profile, value, fallback: true });
    };

    let spacing: Vec<T> = grid.axes.iter().map(|ax| ax[1] - ax[0]).collect();
    let (profile, value) = refine(game, grid.point(start), values[start], &spacing, oracle);
    Ok(PerfectEquilibrium { rule: extreme_rule(game, &profile)?, profile, value, fallback: false })
}

fn refine<T: Scalar>(
    game: &ContinuousGame<T>,
    mut best: Vec<T>,
    mut value: T,
    spacing: &[T],
    oracle: &dyn DeviationOracle<T>,
) -> (Vec<T>, T) {
    let n = game.num_users();
    // Offsets in {-K..K}^N rather than unit moves only, so the search can
    // follow a curved boundary of E* instead of stalling against it.
    let reach: usize = if n <= 2 { 4 } else { 2 };
    let directions: Vec<Vec<T>> = {
        let space = ActionSpace::new(vec![2 * reach + 1; n]);
        (0..space.len())
            .map(|k| space.profile(k).iter().map(|&d| T::from_usize(d) - T::from_usize(reach)).collect::<Vec<_>>())
            .filter(|d| d.iter().any(|&x| x != T::zero()))
            .collect()
    };
    let lengths: Vec<T> = (0..n).map(|i| game.user_bounds(i).1 - game.user_bounds(i).0).collect();
    let relative = spacing.iter().zip(&lengths).map(|(&s, &l)| s / l).fold(T::zero(), T::max);
    let mut scale = T::one() / T::from_usize(2 * reach);
    let floor = T::lit(1e-6);
    let lo0 = game.lowest_level();
    let mut iterations = 0;
    while scale * relative >= floor && iterations < 10_000 {
        iterations += 1;
        let candidates: Vec<(Vec<T>, T)> = directions
            .par_iter()
            .filter_map(|d| {
                let p: Vec<T> = (0..n)
                    .map(|i| {
                        let (lo, hi) = game.user_bounds(i);
                        (best[i] + d[i] * scale * spacing[i]).max(lo).min(hi)
                    })
                    .collect();
                let v = game.manager_payoff(lo0, &p);
                // No membership slack here, so refinement cannot creep along
                // a boundary through profiles that only pass by tolerance.
                (v > value + value_tol(value) && e_star_margin(game, &p, oracle) >= T::zero()).then_some((p, v))
            })
            .collect();
        let mut improved = false;
        for (p, v) in candidates {
            if v > value + value_tol(value) {
                best = p;
                value = v;
                improved = true;
            }
        }
        if !improved {
            scale = scale / T::lit(2.0);
        }
    }
    (best, value)
}

/// A Nash equilibrium of the game with intervention fixed at the lowest
/// level, by round-robin best responses. Such a profile is always in `E*`.
fn no_intervention_nash<T: Scalar>(game: &ContinuousGame<T>, oracle: &dyn DeviationOracle<T>) -> Result<Vec<T>> {
    let n = game.num_users();
    let lo0 = game.lowest_level();
    let mut a: Vec<T> = (0..n)
        .map(|i| {
            let (lo, hi) = game.user_bounds(i);
            (lo + hi) / T::lit(2.0)
        })
        .collect();
    for _ in 0..500 {
        let mut moved = T::zero();
        for i in 0..n {
            let (lo, hi) = game.user_bounds(i);
            let payoff = |x: T| {
                let mut b = a.clone();
                b[i] = x;
                game.user_payoff(i, lo0, &b)
            };
            let xs = linspace(lo, hi, DEFAULT_ORACLE_POINTS);
            let mut k = 0;
            let mut best = payoff(xs[0]);
            for (j, &x) in xs.iter().enumerate().skip(1) {
                let v = payoff(x);
                if v > best {
                    best = v;
                    k = j;
                }
            }
            let bracket = T::tol(1e-12) * T::one().max(hi - lo);
            let x = search::golden_max(payoff, xs[k.saturating_sub(1)], xs[(k + 1).min(xs.len() - 1)], bracket);
            let next = if payoff(x) > best { x } else { xs[k] };
            moved = moved.max((next - a[i]).abs());
            a[i] = next;
        }
        if moved <= T::tol(1e-12) && in_e_star(game, &a, oracle) {
            return Ok(a);
        }
    }
    Err(Error::NoSustainableProfile(
        "no grid profile is sustainable and best responses without intervention do not settle".into(),
    ))
}

/// Whether some maximizer `a^o` of `u_0(lo_0, .)` on the grid already
/// resists every punished unilateral deviation, in which case the best
/// feasible value is attainable.
pub fn corollary1_check<T: Scalar>(
    game: &ContinuousGame<T>,
    profile_grid_step: T,
    oracle: &dyn DeviationOracle<T>,
) -> Result<bool> {
    let grid = ProfileGrid::new(game, profile_grid_step)?;
    let lo0 = game.lowest_level();
    let values: Vec<T> =
        (0..grid.space.len()).into_par_iter().map(|idx| game.manager_payoff(lo0, &grid.point(idx))).collect();
    let top = values.iter().copied().fold(T::neg_infinity(), T::max);
    let tol = T::tol(1e-9) * T::one().max(top.abs());
    Ok((0..values.len())
        .into_par_iter()
        .filter(|&idx| values[idx] >= top - tol)
        .any(|idx| in_e_star(game, &grid.point(idx), oracle)))
}
