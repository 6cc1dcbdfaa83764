//! Probability vectors and regular grids on the probability simplex.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Validates a probability vector (entries nonnegative, sum 1 within `1e-12`)
/// and renormalizes it exactly.
pub fn normalize<T: Scalar>(context: impl Into<String>, mut probs: Vec<T>) -> Result<Vec<T>> {
    let tol = T::tol(1e-12);
    let fail = |context: String, reason: String| Err(Error::InvalidProbability { context, reason });
    if probs.is_empty() {
        return fail(context.into(), "empty vector".into());
    }
    if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < -tol) {
        return fail(context.into(), format!("entry {bad} is negative or not finite"));
    }
    for p in probs.iter_mut() {
        *p = p.max(T::zero());
    }
    let sum: T = probs.iter().copied().sum();
    if (sum - T::one()).abs() > tol {
        return fail(context.into(), format!("entries sum to {sum}"));
    }
    for p in probs.iter_mut() {
        *p = *p / sum;
    }
    Ok(probs)
}

/// Number of subdivisions `n` such that grid points are multiples of `1/n`
/// and `1/n <= step`.
pub fn divisions_for_step<T: Scalar>(step: T) -> Result<usize> {
    if !(step > T::zero() && step <= T::one()) {
        return Err(Error::Params(format!("grid step {step} must lie in (0, 1]")));
    }
    let raw = (T::one() / step).as_f64();
    let n = (raw - 1e-9).ceil().max(1.0);
    Ok(n as usize)
}

/// All points of the simplex in `dim` coordinates whose entries are multiples
/// of `1/divisions`, in lexicographically descending order of the first
/// coordinate's weight (vertex `e_0` first).
pub fn grid<T: Scalar>(dim: usize, divisions: usize) -> Vec<Vec<T>> {
    fn fill(dim: usize, remaining: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == dim {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(dim, remaining - k, prefix, out);
            prefix.pop();
        }
    }
    assert!(dim >= 1);
    let mut counts = Vec::new();
    fill(dim, divisions, &mut Vec::with_capacity(dim), &mut counts);
    let n = T::from_usize(divisions);
    counts.into_iter().map(|c| c.into_iter().map(|k| T::from_usize(k) / n).collect()).collect()
}

pub fn vertex<T: Scalar>(dim: usize, at: usize) -> Vec<T> {
    let mut v = vec![T::zero(); dim];
    v[at] = T::one();
    v
}

/// Index of the single unit entry, if the vector is a vertex.
pub fn as_vertex<T: Scalar>(probs: &[T]) -> Option<usize> {
    let tol = T::tol(1e-12);
    let mut hit = None;
    for (k, &p) in probs.iter().enumerate() {
        if (p - T::one()).abs() <= tol {
            hit = Some(k);
        } else if p.abs() > tol {
            return None;
        }
    }
    hit
}
