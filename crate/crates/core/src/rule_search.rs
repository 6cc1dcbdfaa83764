//! The manager's problem: choose a rule `f` and an equilibrium `alpha` of the
//! induced game to maximize the manager's ex-ante payoff,
//!
//! ```text
//! max_{(f, alpha)} v_0(f, alpha)   subject to   alpha in E(f)
//! ```
//!
//! The rule space is discretized per signal on a simplex grid; each grid rule
//! is scored by the best equilibrium the `nash` module finds for it, and the
//! incumbent is then refined by a pattern search that shifts probability
//! mass between intervention actions with a halving step.
//!
//! Alongside the optimum the summary reports the no-intervention value
//! (`v_tilde`, the best equilibrium under the rule that never intervenes) and
//! the best feasible value ignoring incentives (`v_bar`).

use std::cmp::Ordering;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::finite_core::{
    induced_game, FiniteInterventionGame, FiniteInterventionRule, MixedProfile, DEFAULT_TOLERANCE,
};
use crate::nash::{self, EquilibriumSet};
use crate::scalar::Scalar;
use crate::simplex;

/// Product grids for [`best_feasible`] larger than this are skipped; the
/// manager's payoff is multilinear in the mixtures, so the pure profiles
/// already attain the maximum.
const MAX_PROFILE_GRID: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions<T> {
    /// Grid step for each signal's distribution over intervention actions.
    pub rule_step: T,
    /// Grid step for the mixed-profile scan in [`best_feasible`].
    pub profile_step: T,
    /// Nash and sustainment tolerance.
    pub tolerance: T,
    /// Only consider equilibria in which every user plays the same mixture.
    pub symmetric_only: bool,
    /// Refine the best grid rule by pattern search.
    pub refine: bool,
    /// Pattern search stops once its step drops below this.
    pub refine_to: T,
}

impl<T: Scalar> Default for SearchOptions<T> {
    fn default() -> Self {
        Self {
            rule_step: T::lit(0.02),
            profile_step: T::lit(0.01),
            tolerance: T::lit(DEFAULT_TOLERANCE),
            symmetric_only: false,
            refine: true,
            refine_to: T::lit(1e-7),
        }
    }
}

/// A rule paired with a profile it sustains and the manager's payoff there.
#[derive(Debug, Clone, PartialEq)]
pub struct InterventionEquilibrium<T> {
    pub rule: FiniteInterventionRule<T>,
    pub profile: MixedProfile<T>,
    pub manager_value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSummary<T> {
    /// Best feasible performance, ignoring incentive constraints.
    pub v_bar: T,
    /// Best incentive-compatible performance found.
    pub v_star: T,
    /// Best performance without intervention; `None` when no equilibrium of
    /// the no-intervention game was found (possible only for N >= 3).
    pub v_tilde: Option<T>,
    pub witness_star: InterventionEquilibrium<T>,
    pub witness_tilde: Option<MixedProfile<T>>,
    pub witness_bar: MixedProfile<T>,
    pub rule_grid_step: T,
    pub profile_grid_step: T,
    /// Smallest pattern-search step used (the rule grid step without
    /// refinement).
    pub resolution: T,
    /// Largest rate of change of `v_0(f, alpha*)` per unit of probability
    /// moved between intervention actions at one signal.
    pub lipschitz: T,
    /// `lipschitz * resolution`.
    pub grid_slack: T,
    pub symmetric_only: bool,
    /// Grid rules for which no equilibrium was found (N >= 3 only).
    pub rules_without_equilibrium: usize,
    /// Singular supports skipped across all equilibrium computations.
    pub skipped_supports: usize,
}

impl<T: Scalar> EquilibriumSummary<T> {
    /// JSON report with labels taken from `game`.
    pub fn to_json(&self, game: &FiniteInterventionGame<T>) -> Value {
        json!({
            "v_bar": self.v_bar.as_f64(),
            "v_star": self.v_star.as_f64(),
            "v_tilde": self.v_tilde.map(Scalar::as_f64),
            "witness_rule": rule_json(game, &self.witness_star.rule),
            "witness_profile": profile_json(game, &self.witness_star.profile),
            "witness_tilde_profile": self.witness_tilde.as_ref().map(|p| profile_json(game, p)),
            "witness_bar_profile": profile_json(game, &self.witness_bar),
            "grid_slack": self.grid_slack.as_f64(),
            "lipschitz": self.lipschitz.as_f64(),
            "resolution": self.resolution.as_f64(),
            "rule_grid_step": self.rule_grid_step.as_f64(),
            "profile_grid_step": self.profile_grid_step.as_f64(),
            "symmetric_only": self.symmetric_only,
            "rules_without_equilibrium": self.rules_without_equilibrium,
            "skipped_supports": self.skipped_supports,
        })
    }
}

pub fn rule_json<T: Scalar>(game: &FiniteInterventionGame<T>, rule: &FiniteInterventionRule<T>) -> Value {
    let mut out = Map::new();
    for (y, label) in game.signals().iter().enumerate() {
        let row: Map<String, Value> = game
            .intervention_actions()
            .iter()
            .enumerate()
            .map(|(k, a)| (a.clone(), json!(rule.prob(y, k).as_f64())))
            .collect();
        out.insert(label.clone(), Value::Object(row));
    }
    Value::Object(out)
}

pub fn profile_json<T: Scalar>(game: &FiniteInterventionGame<T>, profile: &MixedProfile<T>) -> Value {
    Value::Array(
        profile
            .per_user()
            .iter()
            .enumerate()
            .map(|(i, mix)| {
                Value::Object(
                    game.user_actions(i).iter().zip(mix).map(|(a, p)| (a.clone(), json!(p.as_f64()))).collect(),
                )
            })
            .collect(),
    )
}

/// Checks that the declared no-intervention action is strictly the manager's
/// favourite at every `(a, y)` and returns its index.
pub fn check_no_intervention_preferred<T: Scalar>(game: &FiniteInterventionGame<T>) -> Result<usize> {
    let tilde = game.no_intervention_action().ok_or(Error::NoInterventionAction)?;
    let space = game.space();
    for idx in 0..space.len() {
        for y in 0..game.signals().len() {
            let best = game.payoff(tilde, idx, y, 0);
            for a0 in (0..game.intervention_actions().len()).filter(|&a0| a0 != tilde) {
                if game.payoff(a0, idx, y, 0) >= best {
                    return Err(Error::NoInterventionNotPreferred {
                        action: game.intervention_actions()[a0].clone(),
                        profile: game.profile_labels(&space.profile(idx)),
                        signal: game.signals()[y].clone(),
                    });
                }
            }
        }
    }
    Ok(tilde)
}

/// The rule that never intervenes.
pub fn no_intervention_rule<T: Scalar>(game: &FiniteInterventionGame<T>) -> Result<FiniteInterventionRule<T>> {
    let tilde = game.no_intervention_action().ok_or(Error::NoInterventionAction)?;
    Ok(FiniteInterventionRule::degenerate(game.signals().len(), game.intervention_actions().len(), tilde))
}

fn value_tol<T: Scalar>(v: T) -> T {
    T::tol(1e-12) * T::one().max(v.abs())
}

fn cmp_lex<T: Scalar>(a: &[T], b: &[T]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| *o != Ordering::Equal)
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Whether candidate `(v, keys)` beats incumbent `(best, best_keys)`: higher
/// value, or equal value and lexicographically smaller keys.
fn beats<T: Scalar>(v: T, keys: &[&[T]], best: T, best_keys: &[&[T]]) -> bool {
    let tol = value_tol(best);
    if v > best + tol {
        return true;
    }
    if v < best - tol {
        return false;
    }
    for (a, b) in keys.iter().zip(best_keys) {
        match cmp_lex(a, b) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
    }
    false
}

/// Maximizes the manager's payoff under the no-intervention rule over all
/// pure profiles and a product grid of mixed profiles.
pub fn best_feasible<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    profile_grid_step: T,
) -> Result<(T, MixedProfile<T>)> {
    check_no_intervention_preferred(game)?;
    let divisions = simplex::divisions_for_step(profile_grid_step)?;
    let rule = no_intervention_rule(game)?;
    let induced = induced_game(game, &rule)?;
    let space = game.space();
    let counts = space.counts();

    let mut best: Option<(T, MixedProfile<T>)> = None;
    let mut consider = |profile: MixedProfile<T>| {
        let v = induced.manager_value(&profile);
        if best.as_ref().is_none_or(|(b, _)| v > *b + value_tol(*b)) {
            best = Some((v, profile));
        }
    };
    for idx in 0..space.len() {
        consider(MixedProfile::pure(counts, &space.profile(idx)));
    }

    let per_user: Vec<Vec<Vec<T>>> = counts.iter().map(|&n| simplex::grid(n, divisions)).collect();
    let total = per_user.iter().try_fold(1usize, |acc, g| acc.checked_mul(g.len()));
    if let Some(total) = total.filter(|&t| t <= MAX_PROFILE_GRID) {
        let grid_space = crate::space::ActionSpace::new(per_user.iter().map(Vec::len).collect());
        for k in 0..total {
            let pick = grid_space.profile(k);
            let mixes = pick.iter().enumerate().map(|(i, &g)| per_user[i][g].clone()).collect();
            consider(MixedProfile::new(mixes)?);
        }
    }
    Ok(best.expect("a game has at least one pure profile"))
}

/// Equilibria of the game induced by `rule`: pure and mixed for two users,
/// pure only otherwise.
pub fn equilibria_under<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    tolerance: T,
) -> Result<(crate::finite_core::InducedGame<T>, EquilibriumSet<T>)> {
    let induced = induced_game(game, rule)?;
    let set = if game.num_users() == 2 {
        nash::mixed_nash_2p(&induced.users, tolerance)?
    } else {
        nash::pure_nash(&induced.users, tolerance)
    };
    Ok((induced, set))
}

struct Scored<T> {
    value: T,
    profile: MixedProfile<T>,
    skipped: usize,
}

/// The manager's best equilibrium under `rule`, if any.
fn score_rule<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    opts: &SearchOptions<T>,
) -> Result<Option<Scored<T>>> {
    let (induced, set) = equilibria_under(game, rule, opts.tolerance)?;
    let sym_tol = T::lit(nash::DEDUP_DISTANCE);
    let mut best: Option<(T, Vec<T>, MixedProfile<T>)> = None;
    for profile in set.profiles() {
        if opts.symmetric_only && !profile.is_symmetric(sym_tol) {
            continue;
        }
        let v = induced.manager_value(profile);
        let key = profile.flat();
        let wins = match &best {
            None => true,
            Some((b, bk, _)) => beats(v, &[&key], *b, &[bk]),
        };
        if wins {
            best = Some((v, key, profile.clone()));
        }
    }
    Ok(best.map(|(value, _, profile)| Scored { value, profile, skipped: set.skipped_supports }))
}

/// Best equilibrium value under `rule` together with its profile.
pub fn best_sustained<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    opts: &SearchOptions<T>,
) -> Result<Option<(T, MixedProfile<T>)>> {
    Ok(score_rule(game, rule, opts)?.map(|s| (s.value, s.profile)))
}

/// All rules whose per-signal distributions lie on the simplex grid with
/// `divisions` subdivisions.
pub fn rule_grid<T: Scalar>(
    num_signals: usize,
    num_actions: usize,
    divisions: usize,
) -> Vec<FiniteInterventionRule<T>> {
    let per_signal = simplex::grid::<T>(num_actions, divisions);
    let space = crate::space::ActionSpace::new(vec![per_signal.len(); num_signals]);
    (0..space.len())
        .map(|k| {
            let rows = space.profile(k).into_iter().map(|g| per_signal[g].clone()).collect();
            FiniteInterventionRule::new(rows).expect("grid rows are distributions")
        })
        .collect()
}

/// [`solve_with`] using default options and the given grid steps.
pub fn solve<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule_grid_step: T,
    profile_grid_step: T,
) -> Result<EquilibriumSummary<T>> {
    let opts = SearchOptions { rule_step: rule_grid_step, profile_step: profile_grid_step, ..Default::default() };
    solve_with(game, &opts)
}

pub fn solve_with<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    opts: &SearchOptions<T>,
) -> Result<EquilibriumSummary<T>> {
    if opts.tolerance < T::zero() {
        return Err(Error::Params("tolerance must be nonnegative".into()));
    }
    if opts.symmetric_only && game.space().counts().windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Params("symmetric search needs equal action counts for all users".into()));
    }
    let divisions = simplex::divisions_for_step(opts.rule_step)?;
    let (v_bar, witness_bar) = best_feasible(game, opts.profile_step)?;

    let tilde_rule = no_intervention_rule(game)?;
    let tilde = score_rule(game, &tilde_rule, opts)?;

    let rules = rule_grid::<T>(game.signals().len(), game.intervention_actions().len(), divisions);
    let scored: Vec<Option<Scored<T>>> =
        rules.par_iter().map(|rule| score_rule(game, rule, opts)).collect::<Result<_>>()?;

    let mut rules_without_equilibrium = 0;
    let mut skipped_supports = tilde.as_ref().map_or(0, |s| s.skipped);
    let mut best: Option<(usize, T, Vec<T>, Vec<T>)> = None;
    for (k, s) in scored.iter().enumerate() {
        let Some(s) = s else {
            rules_without_equilibrium += 1;
            continue;
        };
        skipped_supports += s.skipped;
        let rk = rules[k].flat();
        let pk = s.profile.flat();
        let wins = match &best {
            None => true,
            Some((_, b, brk, bpk)) => beats(s.value, &[&rk, &pk], *b, &[brk, bpk]),
        };
        if wins {
            best = Some((k, s.value, rk, pk));
        }
    }
    let (k, _, _, _) =
        best.ok_or_else(|| Error::NoSustainableProfile("no grid rule has an equilibrium in pure strategies".into()))?;
    let grid_best = scored[k].as_ref().expect("winner was scored");
    let mut incumbent = InterventionEquilibrium {
        rule: rules[k].clone(),
        profile: grid_best.profile.clone(),
        manager_value: grid_best.value,
    };

    let mut resolution = T::one() / T::from_usize(divisions);
    if opts.refine {
        let (refined, step, skipped) = refine(game, incumbent, resolution, opts)?;
        incumbent = refined;
        resolution = step;
        skipped_supports += skipped;
    }

    let lipschitz = rule_sensitivity(game, &incumbent.profile);
    Ok(EquilibriumSummary {
        v_bar,
        v_star: incumbent.manager_value,
        v_tilde: tilde.as_ref().map(|s| s.value),
        witness_tilde: tilde.map(|s| s.profile),
        witness_star: incumbent,
        witness_bar,
        rule_grid_step: opts.rule_step,
        profile_grid_step: opts.profile_step,
        resolution,
        lipschitz,
        grid_slack: lipschitz * resolution,
        symmetric_only: opts.symmetric_only,
        rules_without_equilibrium,
        skipped_supports,
    })
}

/// Pattern search over mass shifts `(signal, from, to)` starting at half the
/// grid spacing. Returns the refined incumbent, the last step tried, and the
/// number of singular supports met on the way.
fn refine<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    mut incumbent: InterventionEquilibrium<T>,
    grid_spacing: T,
    opts: &SearchOptions<T>,
) -> Result<(InterventionEquilibrium<T>, T, usize)> {
    let n_sig = game.signals().len();
    let n_act = game.intervention_actions().len();
    let moves: Vec<(usize, usize, usize)> = (0..n_sig)
        .flat_map(|y| {
            (0..n_act).flat_map(move |from| (0..n_act).filter(move |&to| to != from).map(move |to| (y, from, to)))
        })
        .collect();

    let two = T::lit(2.0);
    let mut step = grid_spacing / two;
    let mut last = grid_spacing;
    let mut skipped = 0;
    let mut iterations = 0;
    while step >= opts.refine_to && iterations < 10_000 {
        iterations += 1;
        last = step;
        let candidates: Vec<(FiniteInterventionRule<T>, Option<Scored<T>>)> = moves
            .par_iter()
            .filter_map(|&(y, from, to)| incumbent.rule.shifted(y, from, to, step))
            .map(|rule| score_rule(game, &rule, opts).map(|s| (rule, s)))
            .collect::<Result<_>>()?;

        let mut improved: Option<InterventionEquilibrium<T>> = None;
        for (rule, s) in candidates {
            let Some(s) = s else { continue };
            skipped += s.skipped;
            let bar = improved.as_ref().map_or(incumbent.manager_value, |c| c.manager_value);
            if s.value > bar + value_tol(bar) {
                improved = Some(InterventionEquilibrium { rule, profile: s.profile, manager_value: s.value });
            }
        }
        match improved {
            Some(better) => incumbent = better,
            None => step = step / two,
        }
    }
    Ok((incumbent, last, skipped))
}

/// `max |d v_0(f, alpha) / d(mass moved from a0 to a0' at y)|` at `profile`,
/// measured by unit finite differences (exact, since `v_0` is linear in `f`).
fn rule_sensitivity<T: Scalar>(game: &FiniteInterventionGame<T>, profile: &MixedProfile<T>) -> T {
    let weights = profile.weights(game.space());
    let n_act = game.intervention_actions().len();
    let mut worst = T::zero();
    for y in 0..game.signals().len() {
        // Manager payoff of each intervention action at y, averaged over alpha.
        let per_action: Vec<T> = (0..n_act)
            .map(|a0| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(idx, &w)| w * game.signal_prob(idx, y) * game.payoff(a0, idx, y, 0))
                    .sum()
            })
            .collect();
        for &a in &per_action {
            for &b in &per_action {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

/// Evidence that the best incentive-compatible value stays strictly below the
/// best feasible value.
#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate<T> {
    pub v_bar: T,
    pub v_star: T,
    pub gap: T,
    pub grid_slack: T,
    /// Best manager value over equilibria of the no-intervention game.
    pub best_no_intervention_value: T,
}

/// Checks the hypotheses under which intervention cannot reach the best
/// feasible value: every signal has positive probability under every profile,
/// and no equilibrium of the no-intervention game attains `v_bar`. When they
/// hold, returns the certificate after confirming the summary respects it.
pub fn gap_certificate<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    summary: &EquilibriumSummary<T>,
) -> Result<Option<GapCertificate<T>>> {
    let space = game.space();
    let full_support =
        (0..space.len()).all(|idx| (0..game.signals().len()).all(|y| game.signal_prob(idx, y) > T::zero()));
    if !full_support {
        return Ok(None);
    }
    let tol = T::lit(DEFAULT_TOLERANCE);
    let rule = no_intervention_rule(game)?;
    let (induced, set) = equilibria_under(game, &rule, tol)?;
    let best_tilde = set.profiles().map(|p| induced.manager_value(p)).fold(T::neg_infinity(), T::max);
    if best_tilde >= summary.v_bar - tol {
        return Ok(None);
    }
    let gap = summary.v_bar - summary.v_star;
    if gap <= summary.grid_slack {
        return Err(Error::Consistency(format!(
            "gap hypotheses hold but v_bar - v_star = {gap} does not exceed the grid slack {}",
            summary.grid_slack
        )));
    }
    Ok(Some(GapCertificate {
        v_bar: summary.v_bar,
        v_star: summary.v_star,
        gap,
        grid_slack: summary.grid_slack,
        best_no_intervention_value: best_tilde,
    }))
}
