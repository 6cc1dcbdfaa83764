//! `N` users and an intervention device share a channel. Quality degrades
//! linearly in total usage, `Q(a_0, a) = [q - b (a_0 + sum a_i)]^+`; user `i`
//! earns `Q a_i` and the manager the users' average. The device jams by
//! transmitting itself, so more intervention hurts everyone.
//!
//! Without intervention users overuse the channel (`a_h = q / (N + 1) b`
//! each instead of the efficient `a_l = q / 2 N b`). With capability
//! `hi_0 >= (sqrt N - 1)^2 q / 2 N b` the efficient profile is sustainable.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::perfect_core::{
    default_profile_grid_step, intervention_equilibrium, AffineRule, ContinuousGame, DeviationOracle,
    PerfectEquilibrium, E_STAR_TOLERANCE,
};
use crate::scalar::{linspace, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct WirelessParams<T> {
    num_users: usize,
    q: T,
    b: T,
    a_max: Vec<T>,
    a0_max: T,
}

impl WirelessParams<f64> {
    /// Two users, `q = 12`, `b = 1`, `a_max = 12` each.
    pub fn reference(a0_max: f64) -> Result<Self> {
        Self::new(2, 12.0, 1.0, vec![12.0, 12.0], a0_max)
    }
}

impl<T: Scalar> WirelessParams<T> {
    pub fn new(num_users: usize, q: T, b: T, a_max: Vec<T>, a0_max: T) -> Result<Self> {
        if num_users == 0 {
            return Err(Error::Params("at least one user is required".into()));
        }
        if !(q > T::zero() && q.is_finite()) || !(b > T::zero() && b.is_finite()) {
            return Err(Error::Params(format!("q = {q} and b = {b} must be positive")));
        }
        if a_max.len() != num_users {
            return Err(Error::Params(format!("{} maximum usage levels for {num_users} users", a_max.len())));
        }
        let need = q / (T::lit(2.0) * b);
        if let Some((i, &m)) = a_max.iter().enumerate().find(|(_, &m)| !(m >= need && m.is_finite())) {
            return Err(Error::Params(format!("maximum usage {m} of user {} is below q / 2b = {need}", i + 1)));
        }
        if !(a0_max >= T::zero() && a0_max.is_finite()) {
            return Err(Error::Params(format!("intervention capability {a0_max} must be nonnegative")));
        }
        Ok(Self { num_users, q, b, a_max, a0_max })
    }

    /// Same maximum usage for every user.
    pub fn symmetric(num_users: usize, q: T, b: T, a_max: T, a0_max: T) -> Result<Self> {
        Self::new(num_users, q, b, vec![a_max; num_users], a0_max)
    }

    pub fn with_a0_max(&self, a0_max: T) -> Result<Self> {
        Self::new(self.num_users, self.q, self.b, self.a_max.clone(), a0_max)
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn a_max(&self) -> &[T] {
        &self.a_max
    }

    pub fn a0_max(&self) -> T {
        self.a0_max
    }

    fn n(&self) -> T {
        T::from_usize(self.num_users)
    }

    pub fn quality(&self, a0: T, profile: &[T]) -> T {
        let total = a0 + profile.iter().copied().sum::<T>();
        (self.q - self.b * total).max(T::zero())
    }

    pub fn user_payoff(&self, user: usize, a0: T, profile: &[T]) -> T {
        self.quality(a0, profile) * profile[user]
    }

    pub fn manager_payoff(&self, a0: T, profile: &[T]) -> T {
        self.quality(a0, profile) * profile.iter().copied().sum::<T>() / self.n()
    }

    /// Efficient per-user usage `q / 2 N b`.
    pub fn a_low(&self) -> T {
        self.q / (T::lit(2.0) * self.n() * self.b)
    }

    /// Per-user usage at the equilibrium without intervention, `q / (N + 1) b`.
    pub fn a_high(&self) -> T {
        self.q / ((self.n() + T::one()) * self.b)
    }

    pub fn benchmarks(&self) -> Benchmarks<T> {
        let (a_l, a_h) = (self.a_low(), self.a_high());
        assert!(a_h >= a_l, "equilibrium usage below efficient usage");
        Benchmarks {
            v_bar: self.q * self.q / (T::lit(4.0) * self.n() * self.b),
            v_tilde: self.q * self.q / ((self.n() + T::one()).powi(2) * self.b),
            a_l,
            a_h,
        }
    }

    /// Smallest capability at which `(a_l, ..., a_l)` is sustainable.
    pub fn a0_min(&self) -> T {
        (self.n().sqrt() - T::one()).powi(2) * self.q / (T::lit(2.0) * self.n() * self.b)
    }

    /// Best payoff of user `i` after deviating alone from `profile` and being
    /// met with full intervention: `([q - b (hi_0 + s_-i)]^+)^2 / 4b`.
    pub fn deviation_value(&self, user: usize, profile: &[T]) -> T {
        let others: T = profile.iter().enumerate().filter(|&(j, _)| j != user).map(|(_, &x)| x).sum();
        let room = (self.q - self.b * (self.a0_max + others)).max(T::zero());
        room * room / (T::lit(4.0) * self.b)
    }

    /// `min_i [u_i(0, a) - deviation value_i]`; nonnegative exactly on `E*`.
    pub fn e_star_margin(&self, profile: &[T]) -> T {
        (0..self.num_users)
            .map(|i| self.user_payoff(i, T::zero(), profile) - self.deviation_value(i, profile))
            .fold(T::infinity(), T::min)
    }

    pub fn in_e_star_closed_form(&self, profile: &[T]) -> bool {
        self.e_star_margin(profile) >= -T::lit(E_STAR_TOLERANCE)
    }

    /// Intervention rate `q / (b a_i) - sum_{j != i} a_j / a_i - 2` at `target`.
    pub fn c_star(&self, user: usize, target: &[T]) -> T {
        let others: T = target.iter().enumerate().filter(|&(j, _)| j != user).map(|(_, &x)| x).sum();
        self.q / (self.b * target[user]) - others / target[user] - T::lit(2.0)
    }

    /// The example as a [`ContinuousGame`]; deviations are punished with full
    /// intervention since payoffs are weakly decreasing in `a_0`.
    pub fn continuous_game(&self) -> Result<ContinuousGame<T>> {
        let user_payoffs = (0..self.num_users)
            .map(|i| {
                let p = self.clone();
                Arc::new(move |a0: T, a: &[T]| p.user_payoff(i, a0, a)) as Arc<dyn Fn(T, &[T]) -> T + Send + Sync>
            })
            .collect();
        let p = self.clone();
        let manager = Arc::new(move |a0: T, a: &[T]| p.manager_payoff(a0, a));
        let top = self.a0_max;
        Ok(ContinuousGame::new(
            self.a_max.iter().map(|&m| (T::zero(), m)).collect(),
            (T::zero(), self.a0_max),
            user_payoffs,
            manager,
        )?
        .with_punishment(Arc::new(move |_, _| top)))
    }

    /// `f(a) = [(N - 1)(sum a_i - q / 2b)]` clamped to `[0, hi_0]`.
    pub fn eq4_rule(&self) -> AffineRule<T> {
        let n = self.num_users;
        AffineRule::new(vec![self.a_low(); n], vec![self.n() - T::one(); n], (T::zero(), self.a0_max))
            .expect("rates and target are finite")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Benchmarks<T> {
    pub v_bar: T,
    pub v_tilde: T,
    pub a_l: T,
    pub a_h: T,
}

/// Deviation oracle using [`WirelessParams::deviation_value`].
#[derive(Debug, Clone)]
pub struct ClosedFormOracle<T>(pub WirelessParams<T>);

impl<T: Scalar> DeviationOracle<T> for ClosedFormOracle<T> {
    fn best_deviation(&self, _game: &ContinuousGame<T>, user: usize, profile: &[T]) -> T {
        self.0.deviation_value(user, profile)
    }
}

/// Best sustainable manager payoff at the given capability.
pub fn v_star<T: Scalar>(params: &WirelessParams<T>, profile_grid_step: T) -> Result<PerfectEquilibrium<T>> {
    let game = params.continuous_game()?;
    intervention_equilibrium(&game, profile_grid_step, &ClosedFormOracle(params.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VStarRow {
    pub a0_max: f64,
    pub v_star: f64,
}

/// `v_star` for each capability in `a0_values` (ascending).
pub fn v_star_curve<T: Scalar>(base: &WirelessParams<T>, a0_values: &[T]) -> Result<Vec<VStarRow>> {
    if a0_values.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Params("capabilities must be strictly ascending".into()));
    }
    let step = default_profile_grid_step(base.num_users());
    a0_values
        .iter()
        .map(|&a0| {
            let eq = v_star(&base.with_a0_max(a0)?, step)?;
            Ok(VStarRow { a0_max: a0.as_f64(), v_star: eq.value.as_f64() })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig5Row {
    pub a1: f64,
    pub a2: f64,
    #[serde(serialize_with = "crate::report::bool_as_int")]
    pub member: bool,
}

/// Closed-form `E*` indicator on a `points x points` grid over the two
/// users' action intervals.
pub fn fig5_region<T: Scalar>(params: &WirelessParams<T>, points: usize) -> Result<Vec<Fig5Row>> {
    if params.num_users != 2 {
        return Err(Error::Params("the region export needs exactly two users".into()));
    }
    if points < 2 {
        return Err(Error::Params("the region grid needs at least two points per axis".into()));
    }
    let xs = linspace(T::zero(), params.a_max[0], points);
    let ys = linspace(T::zero(), params.a_max[1], points);
    Ok(xs
        .iter()
        .flat_map(|&x| {
            ys.iter().map(move |&y| Fig5Row {
                a1: x.as_f64(),
                a2: y.as_f64(),
                member: params.in_e_star_closed_form(&[x, y]),
            })
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig6Row {
    pub a_i: f64,
    pub u_with_rule: f64,
    pub u_no_intervention: f64,
}

/// Payoff of user 1 against its own usage while user 2 stays at `a_l`,
/// under the affine rule and without intervention.
pub fn fig6_data<T: Scalar>(params: &WirelessParams<T>, a_i_values: &[T]) -> Result<Vec<Fig6Row>> {
    if params.num_users != 2 {
        return Err(Error::Params("the payoff curve is defined for two users".into()));
    }
    let rule = params.eq4_rule();
    let a_l = params.a_low();
    a_i_values
        .iter()
        .map(|&x| {
            if !(x >= T::zero() && x <= params.a_max[0]) {
                return Err(Error::Params(format!("usage {x} outside [0, {}]", params.a_max[0])));
            }
            let a = [x, a_l];
            Ok(Fig6Row {
                a_i: x.as_f64(),
                u_with_rule: params.user_payoff(0, rule.evaluate(&a), &a).as_f64(),
                u_no_intervention: params.user_payoff(0, T::zero(), &a).as_f64(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quality_and_payoffs() {
        let p = WirelessParams::reference(0.0).unwrap();
        assert_eq!(p.quality(0.0, &[3.0, 3.0]), 6.0);
        assert_eq!(p.user_payoff(0, 0.0, &[3.0, 3.0]), 18.0);
        assert_eq!(p.manager_payoff(0.0, &[3.0, 3.0]), 18.0);
        assert_eq!(p.quality(0.0, &[7.0, 6.0]), 0.0);
        assert_eq!(p.manager_payoff(0.0, &[7.0, 6.0]), 0.0);
        assert_eq!(p.quality(1.0, &[4.0, 3.0]), 4.0);
    }

    #[test]
    fn benchmark_values() {
        let b = WirelessParams::reference(0.0).unwrap().benchmarks();
        assert_eq!((b.v_bar, b.v_tilde, b.a_l, b.a_h), (18.0, 16.0, 3.0, 4.0));
        let one = WirelessParams::symmetric(1, 12.0, 1.0, 12.0, 0.0).unwrap().benchmarks();
        assert_eq!(one.a_l, one.a_h);
        assert_eq!(one.v_bar, one.v_tilde);
        let four = WirelessParams::symmetric(4, 12.0, 1.0, 12.0, 0.0).unwrap().benchmarks();
        assert_abs_diff_eq!(four.v_bar, 9.0, epsilon = 1e-12);
        assert_abs_diff_eq!(four.v_tilde, 5.76, epsilon = 1e-12);
    }

    #[test]
    fn capability_threshold() {
        let p = WirelessParams::reference(0.0).unwrap();
        assert_abs_diff_eq!(p.a0_min(), 9.0 - 6.0 * 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.a0_min(), 0.51472, epsilon = 1e-5);
        assert_eq!(WirelessParams::symmetric(1, 12.0, 1.0, 12.0, 0.0).unwrap().a0_min(), 0.0);
        assert_abs_diff_eq!(WirelessParams::symmetric(4, 12.0, 1.0, 12.0, 0.0).unwrap().a0_min(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn closed_form_membership() {
        let p = WirelessParams::reference(0.52).unwrap();
        assert_abs_diff_eq!(p.deviation_value(0, &[3.0, 3.0]), 17.9776, epsilon = 1e-10);
        assert!(p.in_e_star_closed_form(&[3.0, 3.0]));
        let p = WirelessParams::reference(0.5).unwrap();
        assert_abs_diff_eq!(p.deviation_value(0, &[3.0, 3.0]), 18.0625, epsilon = 1e-12);
        assert!(!p.in_e_star_closed_form(&[3.0, 3.0]));
        let p = WirelessParams::reference(0.0).unwrap();
        assert!(p.in_e_star_closed_form(&[12.0, 12.0]));
        assert!(p.in_e_star_closed_form(&[4.0, 4.0]));
        assert!(!p.in_e_star_closed_form(&[3.0, 3.0]));
    }

    #[test]
    fn invalid_parameters() {
        assert!(WirelessParams::new(2, 12.0, 1.0, vec![5.0, 12.0], 0.0).is_err());
        assert!(WirelessParams::new(2, 12.0, 0.0, vec![12.0, 12.0], 0.0).is_err());
        assert!(WirelessParams::new(2, 12.0, 1.0, vec![12.0], 0.0).is_err());
        assert!(WirelessParams::new(0, 12.0, 1.0, vec![], 0.0).is_err());
        assert!(WirelessParams::reference(-0.1).is_err());
    }

    #[test]
    fn affine_rule_examples() {
        let f = WirelessParams::reference(12.0).unwrap().eq4_rule();
        assert_eq!(f.evaluate(&[3.0, 3.0]), 0.0);
        assert_eq!(f.evaluate(&[4.0, 3.0]), 1.0);
        assert_eq!(f.evaluate(&[1.0, 1.0]), 0.0);
        assert_eq!(f.evaluate(&[12.0, 12.0]), 12.0);
    }

    #[test]
    fn c_star_examples() {
        let p = WirelessParams::reference(3.0).unwrap();
        assert_abs_diff_eq!(p.c_star(0, &[3.0, 3.0]), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.c_star(0, &[4.0, 4.0]), 0.0, epsilon = 1e-12);
        let p3 = WirelessParams::symmetric(3, 12.0, 1.0, 12.0, 3.0).unwrap();
        assert_abs_diff_eq!(p3.c_star(1, &[2.0, 2.0, 2.0]), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn payoff_curve_rows() {
        let p = WirelessParams::reference(12.0).unwrap();
        let rows = fig6_data(&p, &[3.0, 4.5]).unwrap();
        assert_eq!((rows[0].u_with_rule, rows[0].u_no_intervention), (18.0, 18.0));
        assert_eq!(rows[1].u_no_intervention, 20.25);
        assert_eq!(rows[1].u_with_rule, 13.5);
        assert!(fig6_data(&p, &[13.0]).is_err());
        let three = WirelessParams::symmetric(3, 12.0, 1.0, 12.0, 1.0).unwrap();
        assert!(fig6_data(&three, &[1.0]).is_err());
    }

    #[test]
    fn v_star_endpoints() {
        let p = WirelessParams::reference(0.0).unwrap();
        let eq = v_star(&p, 1.0 / 60.0).unwrap();
        assert_abs_diff_eq!(eq.value, 16.0, epsilon = 1e-9);
        assert_eq!(eq.profile, vec![4.0, 4.0]);
        let eq = v_star(&p.with_a0_max(5.0).unwrap(), 1.0 / 60.0).unwrap();
        assert_abs_diff_eq!(eq.value, 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eq.profile[0] + eq.profile[1], 6.0, epsilon = 1e-9);
        let mid = v_star(&p.with_a0_max(0.1).unwrap(), 1.0 / 60.0).unwrap().value;
        assert!(mid > 16.0 && mid < 18.0, "{mid}");
    }

    #[test]
    fn v_star_curve_requires_ascending_capabilities() {
        let p = WirelessParams::reference(0.0).unwrap();
        assert!(v_star_curve(&p, &[0.2, 0.1]).is_err());
    }

    #[test]
    fn region_export() {
        let p = WirelessParams::reference(0.0).unwrap();
        let rows = fig5_region(&p, 121).unwrap();
        assert_eq!(rows.len(), 121 * 121);
        let members: Vec<(f64, f64)> = rows.iter().filter(|r| r.member).map(|r| (r.a1, r.a2)).collect();
        assert_eq!(members, vec![(4.0, 4.0), (12.0, 12.0)]);
    }
}
