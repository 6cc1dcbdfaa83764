//! Two-user gatekeeper example under imperfect monitoring.
//!
//! Each user picks a low or high usage level `a_L < a_H`. Service quality is
//! high (`y_hi`) with probability `p`, `q` or `r` when zero, one or two users
//! pick the high level, and low (`y_lo`) otherwise. The device either lets
//! the service run (user payoff `y * a_i`) or shuts it off (payoff 0); the
//! manager gets the users' average. Without intervention the users face a
//! prisoner's dilemma.
//!
//! Restricting to symmetric profiles where each user plays `a_L` with
//! probability `alpha`, the best value the manager can sustain is the
//! closed-form `w0(alpha)`. The rule attaining it never intervenes on high
//! quality and lets low quality through with a probability that makes the
//! deviation exactly unprofitable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_core::{FiniteInterventionGame, FiniteInterventionRule};
use crate::scalar::Scalar;

pub const NOT_INTERVENE: &str = "not_intervene";
pub const INTERVENE: &str = "intervene";
pub const LOW: &str = "a_L";
pub const HIGH: &str = "a_H";
pub const QUALITY_HIGH: &str = "y_hi";
pub const QUALITY_LOW: &str = "y_lo";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImperfectParams<T> {
    pub a_low: T,
    pub a_high: T,
    pub y_high: T,
    pub y_low: T,
    pub p: T,
    pub q: T,
    pub r: T,
}

impl ImperfectParams<f64> {
    /// `a_L = 1`, `a_H = 1.19`, `y_hi = 5`, `y_lo = 1`, `q = 0.8`, `r = 0.65`.
    pub fn reference(p: f64) -> Result<Self> {
        Self::new(1.0, 1.19, 5.0, 1.0, p, 0.8, 0.65)
    }
}

impl<T: Scalar> ImperfectParams<T> {
    pub fn new(a_low: T, a_high: T, y_high: T, y_low: T, p: T, q: T, r: T) -> Result<Self> {
        let params = Self { a_low, a_high, y_high, y_low, p, q, r };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let one = T::one();
        let checks: [(bool, &str); 6] = [
            (zero < self.a_low && self.a_low < self.a_high, "0 < a_L < a_H"),
            (zero < self.y_low && self.y_low < self.y_high, "0 < y_lo < y_hi"),
            (zero < self.r && self.r < self.q, "0 < r < q"),
            (self.q < self.p && self.p < one, "q < p < 1"),
            (
                self.y_q() * self.a_high > self.y_p() * self.a_low
                    && self.y_p() * self.a_low > self.y_r() * self.a_high
                    && self.y_r() * self.a_high > self.y_q() * self.a_low,
                "y_q a_H > y_p a_L > y_r a_H > y_q a_L",
            ),
            (
                T::lit(2.0) * self.y_p() * self.a_low > self.y_q() * (self.a_high + self.a_low),
                "2 y_p a_L > y_q (a_H + a_L)",
            ),
        ];
        for (ok, what) in checks {
            if !ok {
                // Name the first failing link of the chained inequality.
                let detail = if what.starts_with("y_q a_H") {
                    if self.y_q() * self.a_high <= self.y_p() * self.a_low {
                        "y_q a_H > y_p a_L"
                    } else if self.y_p() * self.a_low <= self.y_r() * self.a_high {
                        "y_p a_L > y_r a_H"
                    } else {
                        "y_r a_H > y_q a_L"
                    }
                } else {
                    what
                };
                return Err(Error::Params(format!("inequality `{detail}` does not hold")));
            }
        }
        Ok(())
    }

    /// Expected quality `k y_hi + (1 - k) y_lo`.
    pub fn expected_quality(&self, k: T) -> T {
        k * self.y_high + (T::one() - k) * self.y_low
    }

    pub fn y_p(&self) -> T {
        self.expected_quality(self.p)
    }

    pub fn y_q(&self) -> T {
        self.expected_quality(self.q)
    }

    pub fn y_r(&self) -> T {
        self.expected_quality(self.r)
    }

    /// `p a_L - q a_H`: how much a user's switch to `a_H` lowers the chance of
    /// high quality when the other user plays `a_L`, net of usage.
    pub fn sensitivity_vs_low(&self) -> T {
        self.p * self.a_low - self.q * self.a_high
    }

    /// `q a_L - r a_H`: the same quantity when the other user plays `a_H`.
    pub fn sensitivity_vs_high(&self) -> T {
        self.q * self.a_low - self.r * self.a_high
    }

    /// Sensitivity when the other user plays `a_L` with probability `alpha`.
    pub fn sensitivity(&self, alpha: T) -> T {
        alpha * self.sensitivity_vs_low() + (T::one() - alpha) * self.sensitivity_vs_high()
    }

    /// `(p - q)(1 - r) - (q - r)(1 - q)`; its sign is the sign of `w0'`.
    pub fn slope_sign_term(&self) -> T {
        let one = T::one();
        (self.p - self.q) * (one - self.r) - (self.q - self.r) * (one - self.q)
    }

    pub fn v_bar(&self) -> T {
        self.y_p() * self.a_low
    }

    pub fn v_tilde(&self) -> T {
        self.y_r() * self.a_high
    }

    fn w0_denominator(&self, alpha: T) -> T {
        let one = T::one();
        ((one - self.r) * self.a_high - (one - self.q) * self.a_low)
            + alpha * (self.sensitivity_vs_low() - self.sensitivity_vs_high())
    }

    /// The finite game with user actions `[a_L, a_H]`, intervention actions
    /// `[not_intervene, intervene]` and signals `[y_hi, y_lo]`.
    pub fn game(&self) -> FiniteInterventionGame<T> {
        let levels = [self.a_low, self.a_high];
        let quality = [self.y_high, self.y_low];
        let two = T::lit(2.0);
        let labels = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        FiniteInterventionGame::from_fn(
            vec![labels(&[LOW, HIGH]), labels(&[LOW, HIGH])],
            labels(&[NOT_INTERVENE, INTERVENE]),
            labels(&[QUALITY_HIGH, QUALITY_LOW]),
            |a| {
                let hi = match a.iter().filter(|&&x| x == 1).count() {
                    0 => self.p,
                    1 => self.q,
                    _ => self.r,
                };
                vec![hi, T::one() - hi]
            },
            |a0, a, y| {
                if a0 == 1 {
                    return vec![T::zero(); 3];
                }
                let u1 = quality[y] * levels[a[0]];
                let u2 = quality[y] * levels[a[1]];
                vec![(u1 + u2) / two, u1, u2]
            },
        )
        .and_then(|g| g.with_no_intervention_action(NOT_INTERVENE))
        .expect("gatekeeper game is well formed")
    }
}

/// Best value the manager can sustain at the symmetric profile where each
/// user plays `a_L` with probability `alpha`.
pub fn w0<T: Scalar>(params: &ImperfectParams<T>, alpha: T) -> T {
    if alpha == T::zero() {
        return params.v_tilde();
    }
    if params.sensitivity(alpha) < T::zero() {
        return T::zero();
    }
    let numerator = ((params.q - params.r) + alpha * ((params.p - params.q) - (params.q - params.r)))
        * params.a_high
        * params.a_low;
    numerator / params.w0_denominator(alpha) * params.y_high
}

/// Rule attaining [`w0`] at `alpha`, as a rule over the signals
/// `[y_hi, y_lo]` and actions `[not_intervene, intervene]`.
pub fn attaining_rule<T: Scalar>(params: &ImperfectParams<T>, alpha: T) -> Result<FiniteInterventionRule<T>> {
    let rule = |pass_high: T, pass_low: T| {
        FiniteInterventionRule::new(vec![vec![pass_high, T::one() - pass_high], vec![pass_low, T::one() - pass_low]])
    };
    if alpha == T::zero() {
        return rule(T::one(), T::one());
    }
    if params.sensitivity(alpha) < T::zero() {
        return rule(T::zero(), T::zero());
    }
    let pass_low = params.sensitivity(alpha) / params.w0_denominator(alpha) * params.y_high / params.y_low;
    let slack = T::tol(1e-12);
    if !(pass_low >= -slack && pass_low <= T::one() + slack) {
        return Err(Error::Invariant(format!("pass probability at low quality is {pass_low}, outside [0, 1]")));
    }
    rule(T::one(), pass_low.max(T::zero()).min(T::one()))
}

/// Mixing probability at which the sensitivity vanishes.
pub fn alpha_bar<T: Scalar>(params: &ImperfectParams<T>) -> Result<T> {
    let hi = params.sensitivity_vs_high();
    let den = hi - params.sensitivity_vs_low();
    if den == T::zero() {
        return Err(Error::Params("alpha_bar undefined: p a_L - q a_H equals q a_L - r a_H".into()));
    }
    Ok(hi / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    A,
    B,
    C,
    D,
    E,
    F,
}

/// Which expression gives the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VStarFormula {
    /// `v_tilde`
    VTilde,
    /// `max{v_tilde, w0(1)}`
    MaxTildeW1,
    /// `max{v_tilde, w0(alpha_bar)}`
    MaxTildeWAlphaBar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification<T> {
    pub case: Case,
    pub formula: VStarFormula,
    pub v_star: T,
    pub alpha_bar: Option<T>,
    /// Set when the two sensitivities coincide and the slope term is
    /// nonpositive: the case conditions place it in (c) or (a), where `w0` is
    /// only known to be monotone.
    pub boundary: bool,
}

/// Classifies the parameters into one of the six regimes and evaluates the
/// optimal value the regime prescribes.
pub fn classify<T: Scalar>(params: &ImperfectParams<T>) -> Classification<T> {
    let s_low = params.sensitivity_vs_low();
    let s_high = params.sensitivity_vs_high();
    let d = params.slope_sign_term();
    let zero = T::zero();
    let v_tilde = params.v_tilde();

    let case = if s_low < zero && s_high < zero {
        Case::A
    } else if s_low < s_high && d <= zero {
        Case::B
    } else if s_low >= s_high && s_high >= zero {
        Case::C
    } else if s_low >= zero && zero > s_high {
        Case::D
    } else if zero <= s_low && s_low < s_high && d > zero {
        Case::E
    } else {
        debug_assert!(s_low < zero && zero <= s_high && d > zero);
        Case::F
    };
    let alpha_bar = alpha_bar(params).ok();
    let (formula, v_star) = match case {
        Case::A | Case::B => (VStarFormula::VTilde, v_tilde),
        Case::C | Case::D | Case::E => (VStarFormula::MaxTildeW1, v_tilde.max(w0(params, T::one()))),
        Case::F => {
            let ab = alpha_bar.expect("case (f) has distinct sensitivities");
            (VStarFormula::MaxTildeWAlphaBar, v_tilde.max(w0(params, ab)))
        }
    };
    Classification { case, formula, v_star, alpha_bar, boundary: s_low == s_high && d <= zero }
}

/// `v_bar - w0(1)` in closed form; the gap left when the optimum sustains
/// `(a_L, a_L)`.
pub fn gap_at_full_cooperation<T: Scalar>(params: &ImperfectParams<T>) -> T {
    let one = T::one();
    (one - params.p) * params.a_low * (params.y_q() * params.a_high - params.y_p() * params.a_low)
        / ((one - params.q) * params.a_high - (one - params.p) * params.a_low)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig4Row {
    pub alpha: f64,
    pub w0: f64,
    pub v_bar: f64,
}

/// `w0` sampled on `0, step, 2 step, ..., 1` with `v_bar` alongside.
pub fn fig4_data<T: Scalar>(params: &ImperfectParams<T>, alpha_step: T) -> Result<Vec<Fig4Row>> {
    if !(alpha_step > T::zero() && alpha_step <= T::lit(0.5)) {
        return Err(Error::Params(format!("alpha step {alpha_step} must lie in (0, 0.5]")));
    }
    let n = crate::simplex::divisions_for_step(alpha_step)?;
    let v_bar = params.v_bar().as_f64();
    Ok((0..=n)
        .map(|k| {
            let alpha = T::from_usize(k) / T::from_usize(n);
            Fig4Row { alpha: alpha.as_f64(), w0: w0(params, alpha).as_f64(), v_bar }
        })
        .collect())
}
