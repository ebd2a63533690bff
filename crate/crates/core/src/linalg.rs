//! Small dense helpers shared by the sampling and spectral code.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{c64, Mat, MatRef};

/// Complex N×N matrix used throughout the crate.
pub type ComplexMatrix = Mat<c64>;

/// Largest entry modulus.
pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)].norm();
            // NaN must poison the result so callers reject the matrix
            if v.is_nan() {
                return f64::NAN;
            }
            best = best.max(v);
        }
    }
    best
}

/// Induced 1-norm (maximum absolute column sum).
pub fn one_norm(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Max-norm distance of `m` from the identity.
pub fn identity_defect(m: MatRef<'_, c64>) -> (f64, f64) {
    let mut diag = 0.0f64;
    let mut off = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if i == j {
                diag = nan_max(diag, (v - c64::new(1.0, 0.0)).norm());
            } else {
                off = nan_max(off, v.norm());
            }
        }
    }
    (diag, off)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Reciprocal 1-norm condition estimate of the matrix behind `lu`.
///
/// `‖A⁻¹‖₁` is estimated with Hager's method (the complex variant used by
/// LAPACK's `zlacon`): a handful of solves with `A` and `Aᴴ` starting from the
/// uniform vector. The estimate is a lower bound on `‖A⁻¹‖₁`, so the returned
/// value can only overstate `rcond`, typically by a small factor.
pub fn rcond_estimate(a: MatRef<'_, c64>, lu: &PartialPivLu<c64>) -> f64 {
    let n = a.nrows();
    let a_norm = one_norm(a);
    if n == 0 {
        return 1.0;
    }
    if a_norm == 0.0 {
        return 0.0;
    }
    let inv_norm = inverse_one_norm(lu, n);
    if !inv_norm.is_finite() {
        return 0.0;
    }
    1.0 / (a_norm * inv_norm)
}

fn inverse_one_norm(lu: &PartialPivLu<c64>, n: usize) -> f64 {
    let mut x = Mat::<c64>::from_fn(n, 1, |_, _| c64::new(1.0 / n as f64, 0.0));
    let mut estimate = 0.0f64;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        lu.solve_in_place(&mut x);
        let norm: f64 = (0..n).map(|i| x[(i, 0)].norm()).sum();
        if !norm.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && norm <= estimate {
            break;
        }
        estimate = norm;
        let mut xi = Mat::<c64>::from_fn(n, 1, |i, _| {
            let v = x[(i, 0)];
            let m = v.norm();
            if m == 0.0 {
                c64::new(1.0, 0.0)
            } else {
                v / m
            }
        });
        lu.solve_adjoint_in_place(&mut xi);
        let (j, _) = (0..n)
            .map(|i| (i, xi[(i, 0)].norm()))
            .fold((0, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if j == last_j {
            break;
        }
        last_j = j;
        x = Mat::<c64>::from_fn(n, 1, |i, _| {
            if i == j {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
    }
    estimate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcond_of_diagonal_matrix_is_ratio_of_extremes() {
        let a = Mat::<c64>::from_fn(3, 3, |i, j| {
            if i == j {
                c64::new([1.0, 1e-3, 10.0][i], 0.0)
            } else {
                c64::new(0.0, 0.0)
            }
        });
        let lu = a.partial_piv_lu();
        let rc = rcond_estimate(a.as_ref(), &lu);
        assert!((rc - 1e-4).abs() < 1e-12, "{rc}");
    }

    #[test]
    fn rcond_flags_rank_deficient_matrix() {
        let a = Mat::<c64>::from_fn(3, 3, |i, j| c64::new((i + 1) as f64 * (j + 1) as f64, 0.0));
        let lu = a.partial_piv_lu();
        assert!(rcond_estimate(a.as_ref(), &lu) < 1e-14);
    }

    #[test]
    fn identity_defect_splits_diagonal_and_off_diagonal() {
        let mut m = Mat::<c64>::identity(3, 3);
        m[(0, 0)] = c64::new(1.5, 0.0);
        m[(1, 2)] = c64::new(0.0, 0.25);
        assert_eq!(identity_defect(m.as_ref()), (0.5, 0.25));
    }
}
