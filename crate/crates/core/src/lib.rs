//! Solvers for intervention games: a manager commits to an intervention rule
//! mapping observed signals to actions of an intervention device, and users
//! then play the game that rule induces.
//!
//! The solvers are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the scalar to `f64`, which the CLI uses throughout.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod finite_core;
pub mod imperfect_example;
mod linalg;
pub mod nash;
pub mod perfect_core;
pub mod report;
pub mod rule_search;
pub mod scalar;
pub mod simplex;
pub mod space;
pub mod wireless_example;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type FiniteGame64 = finite_core::FiniteInterventionGame<f64>;
pub type FiniteRule64 = finite_core::FiniteInterventionRule<f64>;
pub type MixedProfile64 = finite_core::MixedProfile<f64>;
pub type NormalFormGame64 = nash::NormalFormGame<f64>;
