use crate::scalar::Scalar;

/// Solves the square system `m x = rhs` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below a scale-relative
/// threshold.
pub(crate) fn solve<T: Scalar>(mut m: Vec<Vec<T>>, mut rhs: Vec<T>) -> Option<Vec<T>> {
    let n = rhs.len();
    let scale = m.iter().flatten().fold(T::one(), |acc, x| acc.max(x.abs()));
    let threshold = T::tol(1e-12) * scale;

    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[pivot][col].abs() <= threshold {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor == T::zero() {
                continue;
            }
            for k in col..n {
                let v = m[col][k];
                m[row][k] = m[row][k] - factor * v;
            }
            rhs[row] = rhs[row] - factor * rhs[col];
        }
    }

    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let tail: T = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - tail) / m[row][row];
    }
    Some(x)
}
