//! Sequence acceleration for limits in a regularization parameter.

use num_complex::Complex64;

/// One Richardson step for an error that is first order in the parameter:
/// `fine` was computed at `ratio` times the parameter of `coarse`.
pub fn richardson_first_order(coarse: Complex64, fine: Complex64, ratio: f64) -> Complex64 {
    (fine - coarse * ratio) / (1.0 - ratio)
}

/// Value at zero of the interpolating polynomial through `(h_i, v_i)`
/// (Neville's scheme). Equivalent to repeated Richardson elimination with
/// arbitrary parameter spacing.
pub fn neville_at_zero(h: &[f64], v: &[Complex64]) -> Complex64 {
    assert_eq!(h.len(), v.len(), "parameter and value lists must match");
    assert!(!h.is_empty(), "need at least one point");
    let mut p = v.to_vec();
    let n = h.len();
    for level in 1..n {
        for i in 0..n - level {
            let (hi, hj) = (h[i], h[i + level]);
            // p_i <- (0 - h_j) p_i + (h_i - 0) p_{i+1} over (h_i - h_j)
            p[i] = (p[i] * (-hj) + p[i + 1] * hi) / (hi - hj);
        }
    }
    p[0]
}

/// Empirical convergence order from the last three members of a sequence
/// computed on a geometric schedule with the given ratio.
pub fn observed_order(values: &[Complex64], ratio: f64) -> Option<f64> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let g1 = (values[n - 2] - values[n - 3]).norm();
    let g2 = (values[n - 1] - values[n - 2]).norm();
    if g1 == 0.0 || g2 == 0.0 {
        return None;
    }
    Some((g1 / g2).ln() / (1.0 / ratio).ln())
}
