//! Truncated affine rules `f(a) = clamp(c . (a - target) + lo_0, lo_0, hi_0)`
//! and the sufficient second-order conditions under which the rate profile
//! `c_i = -(du_i/da_i) / (du_i/da_0)` at the target sustains it.

use serde::Serialize;

use super::ContinuousGame;
use crate::error::{Error, Result};
use crate::scalar::{linspace, Scalar};

/// Rates smaller than this in magnitude use the zero-rate conditions.
pub const ZERO_RATE: f64 = 1e-7;
/// Sampled condition values up to this are accepted as nonpositive.
pub const CONDITION_TOLERANCE: f64 = 1e-6;
const SAMPLES: usize = 201;
const DEVIATION_POINTS: usize = 2001;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineRule<T> {
    target: Vec<T>,
    rates: Vec<T>,
    bounds: (T, T),
}

impl<T: Scalar> AffineRule<T> {
    pub fn new(target: Vec<T>, rates: Vec<T>, bounds: (T, T)) -> Result<Self> {
        if target.len() != rates.len() {
            return Err(Error::Shape(format!("{} rates for a target with {} users", rates.len(), target.len())));
        }
        if !(bounds.0 <= bounds.1) || rates.iter().chain(&target).any(|x| !x.is_finite()) {
            return Err(Error::Params("affine rule needs finite rates and lo <= hi".into()));
        }
        Ok(Self { target, rates, bounds })
    }

    pub fn target(&self) -> &[T] {
        &self.target
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    pub fn bounds(&self) -> (T, T) {
        self.bounds
    }

    pub fn evaluate(&self, profile: &[T]) -> T {
        let raw: T =
            self.rates.iter().zip(profile.iter().zip(&self.target)).map(|(&c, (&a, &t))| c * (a - t)).sum::<T>()
                + self.bounds.0;
        raw.max(self.bounds.0).min(self.bounds.1)
    }
}

/// Finite-difference steps as fractions of the relevant interval length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeSteps<T> {
    /// Central first differences in a user's action.
    pub central: T,
    /// Right one-sided difference in the intervention level.
    pub one_sided: T,
    /// Second differences.
    pub second: T,
}

impl<T: Scalar> Default for DerivativeSteps<T> {
    fn default() -> Self {
        Self { central: T::lit(1e-5), one_sided: T::lit(1e-6), second: T::lit(1e-4) }
    }
}

/// Payoff of user `i` as a function of `(a_0, a_i)` with the others held at
/// the target.
struct Slice<'a, T> {
    game: &'a ContinuousGame<T>,
    user: usize,
    target: &'a [T],
    lo: T,
    hi: T,
    lo0: T,
    hi0: T,
}

impl<'a, T: Scalar> Slice<'a, T> {
    fn new(game: &'a ContinuousGame<T>, user: usize, target: &'a [T]) -> Self {
        let (lo, hi) = game.user_bounds(user);
        let (lo0, hi0) = game.intervention_bounds();
        Self { game, user, target, lo, hi, lo0, hi0 }
    }

    fn u(&self, a0: T, x: T) -> T {
        let mut a = self.target.to_vec();
        a[self.user] = x;
        self.game.user_payoff(self.user, a0, &a)
    }

    fn shift(x: T, h: T, lo: T, hi: T) -> T {
        if hi - lo <= h + h {
            (lo + hi) / T::lit(2.0)
        } else {
            x.max(lo + h).min(hi - h)
        }
    }

    fn d_a(&self, a0: T, x: T, rel: T) -> T {
        let h = rel * (self.hi - self.lo);
        let x = Self::shift(x, h, self.lo, self.hi);
        (self.u(a0, x + h) - self.u(a0, x - h)) / (h + h)
    }

    fn d_aa(&self, a0: T, x: T, rel: T) -> T {
        let h = rel * (self.hi - self.lo);
        let x = Self::shift(x, h, self.lo, self.hi);
        (self.u(a0, x + h) - T::lit(2.0) * self.u(a0, x) + self.u(a0, x - h)) / (h * h)
    }

    fn d_00(&self, a0: T, x: T, rel: T) -> T {
        let k = rel * (self.hi0 - self.lo0);
        let y = Self::shift(a0, k, self.lo0, self.hi0);
        (self.u(y + k, x) - T::lit(2.0) * self.u(y, x) + self.u(y - k, x)) / (k * k)
    }

    fn d_a0(&self, a0: T, x: T, rel: T) -> T {
        let h = rel * (self.hi - self.lo);
        let k = rel * (self.hi0 - self.lo0);
        let x = Self::shift(x, h, self.lo, self.hi);
        let y = Self::shift(a0, k, self.lo0, self.hi0);
        (self.u(y + k, x + h) - self.u(y - k, x + h) - self.u(y + k, x - h) + self.u(y - k, x - h))
            / (T::lit(4.0) * h * k)
    }
}

fn check_interior<T: Scalar>(game: &ContinuousGame<T>, target: &[T]) -> Result<()> {
    if target.len() != game.num_users() {
        return Err(Error::Shape(format!("target has {} entries for {} users", target.len(), game.num_users())));
    }
    for (i, &a) in target.iter().enumerate() {
        let (lo, hi) = game.user_bounds(i);
        if !(lo < a && a < hi) {
            return Err(Error::Params(format!("target action {a} of user {} is not interior to [{lo}, {hi}]", i + 1)));
        }
    }
    let (lo0, hi0) = game.intervention_bounds();
    if !(lo0 < hi0) {
        return Err(Error::Params("affine rules need a nondegenerate intervention interval".into()));
    }
    Ok(())
}

fn check_strictly_decreasing<T: Scalar>(game: &ContinuousGame<T>, target: &[T]) -> Result<()> {
    let (lo0, hi0) = game.intervention_bounds();
    let levels = linspace(lo0, hi0, 11);
    for i in 0..game.num_users() {
        let values: Vec<T> = levels.iter().map(|&a0| game.user_payoff(i, a0, target)).collect();
        if let Some(k) = (1..values.len()).find(|&k| values[k] >= values[k - 1]) {
            return Err(Error::Params(format!(
                "payoff of user {} at the target is not strictly decreasing in the intervention level \
                 between {} and {}",
                i + 1,
                levels[k - 1],
                levels[k]
            )));
        }
    }
    Ok(())
}

/// `c_i = -(du_i/da_i) / (du_i/da_0)` at `(lo_0, target)`, with a central
/// difference in `a_i` and a second-order right difference in `a_0`.
pub fn affine_rate<T: Scalar>(game: &ContinuousGame<T>, target: &[T], steps: &DerivativeSteps<T>) -> Result<Vec<T>> {
    check_interior(game, target)?;
    check_strictly_decreasing(game, target)?;
    let (lo0, hi0) = game.intervention_bounds();
    (0..game.num_users())
        .map(|i| {
            let s = Slice::new(game, i, target);
            let x = target[i];
            let d_i = s.d_a(lo0, x, steps.central);
            let h = steps.one_sided * (hi0 - lo0);
            let d_0 = (T::lit(-3.0) * s.u(lo0, x) + T::lit(4.0) * s.u(lo0 + h, x) - s.u(lo0 + h + h, x)) / (h + h);
            if d_0.abs() < T::tol(1e-10) {
                return Err(Error::Params(format!(
                    "payoff of user {} barely reacts to the intervention level at the target (derivative {d_0})",
                    i + 1
                )));
            }
            Ok(-d_i / d_0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RateSign {
    Zero,
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck<T> {
    pub name: &'static str,
    pub interval: (T, T),
    pub empty: bool,
    /// Largest sampled value of the quantity required to be nonpositive
    /// (sign flipped for the nonnegative condition); `-inf` when empty.
    pub worst_margin: T,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserConditions<T> {
    pub user: usize,
    pub rate: T,
    pub sign: RateSign,
    pub checks: Vec<ConditionCheck<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineReport<T> {
    pub users: Vec<UserConditions<T>>,
    pub conditions_hold: bool,
    /// Largest gain over the target payoff found by scanning unilateral
    /// deviations under the affine rule.
    pub max_deviation_gain: T,
    pub deviation_check_passed: bool,
    pub flags: Vec<String>,
}

fn sample<T: Scalar>(name: &'static str, lo: T, hi: T, quantity: impl Fn(T) -> T) -> ConditionCheck<T> {
    if lo >= hi {
        return ConditionCheck { name, interval: (lo, hi), empty: true, worst_margin: T::neg_infinity(), holds: true };
    }
    let denom = T::from_usize(SAMPLES + 1);
    let worst =
        (1..=SAMPLES).map(|k| quantity(lo + (hi - lo) * T::from_usize(k) / denom)).fold(T::neg_infinity(), T::max);
    ConditionCheck {
        name,
        interval: (lo, hi),
        empty: false,
        worst_margin: worst,
        holds: worst <= T::lit(CONDITION_TOLERANCE),
    }
}

/// Samples each sufficient condition for `rates` to sustain `target` on its
/// interval, and independently scans unilateral deviations under the rule.
pub fn affine_sustains_check<T: Scalar>(
    game: &ContinuousGame<T>,
    target: &[T],
    rates: &[T],
    steps: &DerivativeSteps<T>,
) -> Result<AffineReport<T>> {
    check_interior(game, target)?;
    let (lo0, hi0) = game.intervention_bounds();
    let rule = AffineRule::new(target.to_vec(), rates.to_vec(), (lo0, hi0))?;
    let span = hi0 - lo0;
    let rel = steps.second;
    let mut flags = Vec::new();

    let users: Vec<UserConditions<T>> = (0..game.num_users())
        .map(|i| {
            let s = Slice::new(game, i, target);
            let (lo, hi, t, c) = (s.lo, s.hi, target[i], rates[i]);
            let combined = |x: T| {
                let a0 = c * (x - t) + lo0;
                c * c * s.d_00(a0, x, rel) + T::lit(2.0) * c * s.d_a0(a0, x, rel) + s.d_aa(a0, x, rel)
            };
            let sign = if c.abs() < T::lit(ZERO_RATE) {
                RateSign::Zero
            } else if c > T::zero() {
                RateSign::Positive
            } else {
                RateSign::Negative
            };
            let checks = match sign {
                RateSign::Zero => vec![sample("concave_at_lowest_level", lo, hi, |x| s.d_aa(lo0, x, rel))],
                RateSign::Positive => {
                    let reach = t + span / c;
                    vec![
                        sample("concave_below_target", lo, t, |x| s.d_aa(lo0, x, rel)),
                        sample("combined_concave_above_target", t, hi.min(reach), combined),
                        sample("decreasing_at_highest_level", reach, hi, |x| s.d_a(hi0, x, steps.central)),
                    ]
                }
                RateSign::Negative => {
                    let reach = t + span / c;
                    let lower = hi.max(reach);
                    if lower >= t {
                        flags.push(format!(
                            "user {}: combined condition interval ({lower}, {t}) is empty as stated",
                            i + 1
                        ));
                    }
                    vec![
                        sample("increasing_at_highest_level", lo, reach, |x| -s.d_a(hi0, x, steps.central)),
                        sample("combined_concave_below_target", lower, t, combined),
                        sample("concave_above_target", t, hi, |x| s.d_aa(lo0, x, rel)),
                    ]
                }
            };
            UserConditions { user: i + 1, rate: c, sign, checks }
        })
        .collect();
    let conditions_hold = users.iter().all(|u| u.checks.iter().all(|c| c.holds));

    let mut max_gain = T::neg_infinity();
    for i in 0..game.num_users() {
        let base = game.user_payoff(i, lo0, target);
        let (lo, hi) = game.user_bounds(i);
        let mut a = target.to_vec();
        for x in linspace(lo, hi, DEVIATION_POINTS) {
            a[i] = x;
            max_gain = max_gain.max(game.user_payoff(i, rule.evaluate(&a), &a) - base);
        }
    }
    let scale = (0..game.num_users()).map(|i| game.user_payoff(i, lo0, target).abs()).fold(T::one(), T::max);
    let deviation_check_passed = max_gain <= T::tol(1e-9) * scale;
    if conditions_hold && !deviation_check_passed {
        flags.push(format!("sampled conditions hold but a deviation gains {max_gain}"));
    }
    Ok(AffineReport { users, conditions_hold, max_deviation_gain: max_gain, deviation_check_passed, flags })
}
