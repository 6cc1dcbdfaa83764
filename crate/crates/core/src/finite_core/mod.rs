//! Finite intervention games.
//!
//! A game is the tuple of users, their finite action sets, the intervention
//! device's action set `A0`, a finite signal set `Y` with distribution
//! `rho(y | a)`, and payoffs `u_i(a0, a, y)` for the manager (index 0) and the
//! users (indices `1..=N`). An intervention rule maps each signal to a
//! distribution over `A0`; fixing one induces a normal-form game among the
//! users whose entries are the ex-ante payoffs
//!
//! ```text
//! v_i(f, a) = sum_y sum_a0 u_i(a0, a, y) f(a0 | y) rho(y | a)
//! ```

mod json;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::nash::{self, NormalFormGame};
use crate::scalar::Scalar;
use crate::simplex;
use crate::space::ActionSpace;

pub use json::{game_from_json, game_from_json_str, game_to_json};

/// Default tolerance for sustainment and Nash checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteInterventionGame<T> {
    user_actions: Vec<Vec<String>>,
    intervention_actions: Vec<String>,
    signals: Vec<String>,
    no_intervention: Option<usize>,
    space: ActionSpace,
    // [profile][signal]
    signal_dist: Vec<T>,
    // [a0][profile][signal][participant]
    payoffs: Vec<T>,
}

fn check_labels(kind: &'static str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::Shape(format!("{kind} label list is empty")));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel { kind, label: l.clone() });
        }
    }
    Ok(())
}

impl<T: Scalar> FiniteInterventionGame<T> {
    /// Builds a game by tabulating `rho(a)` for every pure profile and the
    /// payoff vector `[u_0, u_1, ..., u_N]` for every `(a0, a, y)`. Action and
    /// signal arguments to the closures are indices into the label lists.
    pub fn from_fn(
        user_actions: Vec<Vec<String>>,
        intervention_actions: Vec<String>,
        signals: Vec<String>,
        mut signal_dist: impl FnMut(&[usize]) -> Vec<T>,
        mut payoff: impl FnMut(usize, &[usize], usize) -> Vec<T>,
    ) -> Result<Self> {
        if user_actions.is_empty() {
            return Err(Error::Shape("a game needs at least one user".into()));
        }
        for acts in &user_actions {
            check_labels("user action", acts)?;
        }
        check_labels("intervention action", &intervention_actions)?;
        check_labels("signal", &signals)?;

        let space = ActionSpace::new(user_actions.iter().map(Vec::len).collect());
        let n_sig = signals.len();
        let n_who = user_actions.len() + 1;

        let mut dist = Vec::with_capacity(space.len() * n_sig);
        for idx in 0..space.len() {
            let profile = space.profile(idx);
            let row = signal_dist(&profile);
            if row.len() != n_sig {
                return Err(Error::Shape(format!(
                    "signal distribution at profile {} has {} entries, expected {n_sig}",
                    join_labels(&user_actions, &profile),
                    row.len()
                )));
            }
            let ctx = format!("signal distribution at ({})", join_labels(&user_actions, &profile));
            dist.extend(simplex::normalize(ctx, row)?);
        }

        let mut payoffs = Vec::with_capacity(intervention_actions.len() * dist.len() * n_who);
        for a0 in 0..intervention_actions.len() {
            for idx in 0..space.len() {
                let profile = space.profile(idx);
                for y in 0..n_sig {
                    let u = payoff(a0, &profile, y);
                    if u.len() != n_who || u.iter().any(|x| !x.is_finite()) {
                        return Err(Error::Shape(format!(
                            "payoff at ({},{},{}) must be {n_who} finite reals",
                            intervention_actions[a0],
                            join_labels(&user_actions, &profile),
                            signals[y]
                        )));
                    }
                    payoffs.extend(u);
                }
            }
        }

        Ok(Self {
            user_actions,
            intervention_actions,
            signals,
            no_intervention: None,
            space,
            signal_dist: dist,
            payoffs,
        })
    }

    /// Marks the intervention action that stands for "no intervention".
    pub fn with_no_intervention_action(mut self, label: &str) -> Result<Self> {
        self.no_intervention = Some(self.intervention_index(label)?);
        Ok(self)
    }

    pub fn num_users(&self) -> usize {
        self.user_actions.len()
    }

    pub fn user_actions(&self, user: usize) -> &[String] {
        &self.user_actions[user]
    }

    pub fn all_user_actions(&self) -> &[Vec<String>] {
        &self.user_actions
    }

    pub fn intervention_actions(&self) -> &[String] {
        &self.intervention_actions
    }

    pub fn signals(&self) -> &[String] {
        &self.signals
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    /// Index of the declared no-intervention action. A game with a single
    /// intervention action implicitly declares it.
    pub fn no_intervention_action(&self) -> Option<usize> {
        self.no_intervention.or_else(|| (self.intervention_actions.len() == 1).then_some(0))
    }

    /// `rho(y | a)` for the profile at flat index `profile`.
    pub fn signal_prob(&self, profile: usize, signal: usize) -> T {
        self.signal_dist[profile * self.signals.len() + signal]
    }

    /// `u_who(a0, a, y)` for the profile at flat index `profile`.
    pub fn payoff(&self, action: usize, profile: usize, signal: usize, who: usize) -> T {
        let n_who = self.num_users() + 1;
        let cell = (action * self.space.len() + profile) * self.signals.len() + signal;
        self.payoffs[cell * n_who + who]
    }

    pub fn intervention_index(&self, label: &str) -> Result<usize> {
        lookup("intervention action", &self.intervention_actions, label)
    }

    pub fn signal_index(&self, label: &str) -> Result<usize> {
        lookup("signal", &self.signals, label)
    }

    pub fn user_action_index(&self, user: usize, label: &str) -> Result<usize> {
        let acts = self.user_actions.get(user).ok_or_else(|| Error::Shape(format!("no user {user}")))?;
        lookup("user action", acts, label)
    }

    /// Resolves one action label per user into a pure profile.
    pub fn profile_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        if labels.len() != self.num_users() {
            return Err(Error::Shape(format!(
                "profile has {} labels, game has {} users",
                labels.len(),
                self.num_users()
            )));
        }
        labels.iter().enumerate().map(|(i, l)| self.user_action_index(i, l.as_ref())).collect()
    }

    pub fn profile_labels(&self, profile: &[usize]) -> String {
        join_labels(&self.user_actions, profile)
    }

    pub(crate) fn check_rule(&self, rule: &FiniteInterventionRule<T>) -> Result<()> {
        if rule.num_signals() != self.signals.len() || rule.num_actions() != self.intervention_actions.len() {
            return Err(Error::Shape(format!(
                "rule is {}x{} (signals x actions), game is {}x{}",
                rule.num_signals(),
                rule.num_actions(),
                self.signals.len(),
                self.intervention_actions.len()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_profile(&self, profile: &MixedProfile<T>) -> Result<()> {
        let counts: Vec<usize> = profile.per_user().iter().map(Vec::len).collect();
        if counts != self.space.counts() {
            return Err(Error::Shape(format!(
                "mixed profile has action counts {counts:?}, game has {:?}",
                self.space.counts()
            )));
        }
        Ok(())
    }

    fn check_who(&self, who: usize) -> Result<()> {
        if who > self.num_users() {
            return Err(Error::Shape(format!("participant {who} out of range 0..={}", self.num_users())));
        }
        Ok(())
    }

    /// `v_who(f, a)` for the profile at flat index `profile`; no validation.
    pub(crate) fn ex_ante_at(&self, rule: &FiniteInterventionRule<T>, profile: usize, who: usize) -> T {
        let mut total = T::zero();
        for y in 0..self.signals.len() {
            let rho = self.signal_prob(profile, y);
            if rho == T::zero() {
                continue;
            }
            let mut inner = T::zero();
            for (a0, &f) in rule.per_signal[y].iter().enumerate() {
                if f != T::zero() {
                    inner = inner + self.payoff(a0, profile, y, who) * f;
                }
            }
            total = total + inner * rho;
        }
        total
    }
}

fn lookup(kind: &'static str, labels: &[String], label: &str) -> Result<usize> {
    labels.iter().position(|l| l == label).ok_or_else(|| Error::UnknownLabel { kind, label: label.to_string() })
}

fn join_labels(user_actions: &[Vec<String>], profile: &[usize]) -> String {
    profile.iter().enumerate().map(|(i, &a)| user_actions[i][a].as_str()).collect::<Vec<_>>().join(",")
}

/// Map from each signal to a distribution over intervention actions.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteInterventionRule<T> {
    per_signal: Vec<Vec<T>>,
}

impl<T: Scalar> FiniteInterventionRule<T> {
    /// One distribution over intervention actions per signal; every row is
    /// validated and renormalized.
    pub fn new(per_signal: Vec<Vec<T>>) -> Result<Self> {
        let width = per_signal.first().map(Vec::len).unwrap_or(0);
        if per_signal.is_empty() || width == 0 {
            return Err(Error::Shape("a rule needs at least one signal and one action".into()));
        }
        let rows = per_signal
            .into_iter()
            .enumerate()
            .map(|(y, row)| {
                if row.len() != width {
                    return Err(Error::Shape(format!("rule row {y} has {} entries, expected {width}", row.len())));
                }
                simplex::normalize(format!("rule at signal {y}"), row)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_signal: rows })
    }

    /// Rule playing `action` with certainty at every signal.
    pub fn degenerate(num_signals: usize, num_actions: usize, action: usize) -> Self {
        Self { per_signal: vec![simplex::vertex(num_actions, action); num_signals] }
    }

    pub fn num_signals(&self) -> usize {
        self.per_signal.len()
    }

    pub fn num_actions(&self) -> usize {
        self.per_signal[0].len()
    }

    pub fn per_signal(&self) -> &[Vec<T>] {
        &self.per_signal
    }

    /// `f(a0 | y)`.
    pub fn prob(&self, signal: usize, action: usize) -> T {
        self.per_signal[signal][action]
    }

    /// Per-signal mixture `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        if self.num_signals() != other.num_signals() || self.num_actions() != other.num_actions() {
            return Err(Error::Shape("cannot mix rules of different shapes".into()));
        }
        let rows = self
            .per_signal
            .iter()
            .zip(&other.per_signal)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| lambda * x + (T::one() - lambda) * y).collect())
            .collect();
        Self::new(rows)
    }

    /// Row-major flattening used for lexicographic tie-breaking.
    pub fn flat(&self) -> Vec<T> {
        self.per_signal.iter().flatten().copied().collect()
    }

    /// Moves `amount` of probability at `signal` from action `from` to action
    /// `to`, limited by the mass available.
    pub(crate) fn shifted(&self, signal: usize, from: usize, to: usize, amount: T) -> Option<Self> {
        let available = self.per_signal[signal][from];
        let moved = amount.min(available);
        if moved <= T::zero() {
            return None;
        }
        let mut rows = self.per_signal.clone();
        rows[signal][from] = available - moved;
        rows[signal][to] = rows[signal][to] + moved;
        Some(Self { per_signal: rows })
    }
}

/// One probability distribution per user over that user's pure actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile<T> {
    per_user: Vec<Vec<T>>,
}

impl<T: Scalar> MixedProfile<T> {
    pub fn new(per_user: Vec<Vec<T>>) -> Result<Self> {
        if per_user.is_empty() {
            return Err(Error::Shape("a profile needs at least one user".into()));
        }
        let per_user = per_user
            .into_iter()
            .enumerate()
            .map(|(i, v)| simplex::normalize(format!("mixed action of user {}", i + 1), v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { per_user })
    }

    /// Degenerate profile on the pure profile `actions`.
    pub fn pure(counts: &[usize], actions: &[usize]) -> Self {
        Self { per_user: counts.iter().zip(actions).map(|(&n, &a)| simplex::vertex(n, a)).collect() }
    }

    pub fn num_users(&self) -> usize {
        self.per_user.len()
    }

    pub fn per_user(&self) -> &[Vec<T>] {
        &self.per_user
    }

    pub fn user(&self, i: usize) -> &[T] {
        &self.per_user[i]
    }

    /// The pure profile, if every user's mixture is degenerate.
    pub fn as_pure(&self) -> Option<Vec<usize>> {
        self.per_user.iter().map(|v| simplex::as_vertex(v)).collect()
    }

    /// Replaces user `i`'s mixture without revalidating it.
    pub fn with_user(&self, i: usize, mixture: Vec<T>) -> Self {
        let mut per_user = self.per_user.clone();
        per_user[i] = mixture;
        Self { per_user }
    }

    /// Product-distribution weight of every pure profile in `space` order.
    pub fn weights(&self, space: &ActionSpace) -> Vec<T> {
        (0..space.len())
            .map(|idx| space.profile(idx).iter().enumerate().fold(T::one(), |w, (i, &a)| w * self.per_user[i][a]))
            .collect()
    }

    /// True when all users share the same mixture to within `tol`.
    pub fn is_symmetric(&self, tol: T) -> bool {
        let first = &self.per_user[0];
        self.per_user.iter().all(|v| v.len() == first.len() && v.iter().zip(first).all(|(a, b)| (*a - *b).abs() <= tol))
    }

    pub fn linf_distance(&self, other: &Self) -> T {
        self.per_user
            .iter()
            .zip(&other.per_user)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (*x - *y).abs()))
            .fold(T::zero(), T::max)
    }

    pub fn flat(&self) -> Vec<T> {
        self.per_user.iter().flatten().copied().collect()
    }
}

/// `v_who(f, a)` at a pure profile given as action indices.
pub fn ex_ante_payoff<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    profile: &[usize],
    who: usize,
) -> Result<T> {
    game.check_rule(rule)?;
    game.check_who(who)?;
    if !game.space.contains(profile) {
        return Err(Error::Shape(format!("profile {profile:?} is not a valid pure profile")));
    }
    Ok(game.ex_ante_at(rule, game.space.index(profile), who))
}

/// Expectation of [`ex_ante_payoff`] under the product distribution of
/// `profile`.
pub fn mixed_ex_ante_payoff<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    profile: &MixedProfile<T>,
    who: usize,
) -> Result<T> {
    game.check_rule(rule)?;
    game.check_who(who)?;
    game.check_profile(profile)?;
    Ok(profile
        .weights(&game.space)
        .into_iter()
        .enumerate()
        .filter(|(_, w)| *w != T::zero())
        .map(|(idx, w)| w * game.ex_ante_at(rule, idx, who))
        .sum())
}

/// The users' normal-form game under a fixed rule, with the manager's ex-ante
/// payoff tensor alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedGame<T> {
    pub users: NormalFormGame<T>,
    pub manager: Vec<T>,
}

impl<T: Scalar> InducedGame<T> {
    /// Manager's expected payoff under a mixed profile.
    pub fn manager_value(&self, profile: &MixedProfile<T>) -> T {
        profile.weights(self.users.space()).into_iter().zip(&self.manager).map(|(w, &v)| w * v).sum()
    }
}

pub fn induced_game<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
) -> Result<InducedGame<T>> {
    game.check_rule(rule)?;
    let n = game.space.len();
    let manager = (0..n).map(|idx| game.ex_ante_at(rule, idx, 0)).collect();
    let users = (1..=game.num_users()).map(|who| (0..n).map(|idx| game.ex_ante_at(rule, idx, who)).collect()).collect();
    Ok(InducedGame { users: NormalFormGame::new(game.space.counts().to_vec(), users)?, manager })
}

/// Whether `rule` sustains `profile`, i.e. `profile` is a Nash equilibrium of
/// the induced game up to `tolerance`.
pub fn sustains<T: Scalar>(
    game: &FiniteInterventionGame<T>,
    rule: &FiniteInterventionRule<T>,
    profile: &MixedProfile<T>,
    tolerance: T,
) -> Result<bool> {
    if tolerance < T::zero() {
        return Err(Error::Params("tolerance must be nonnegative".into()));
    }
    game.check_profile(profile)?;
    let induced = induced_game(game, rule)?;
    Ok(nash::verify_nash(&induced.users, profile, tolerance))
}
