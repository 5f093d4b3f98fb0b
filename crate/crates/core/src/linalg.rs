//! Exact Gaussian elimination over the rationals.

use num_rational::BigRational;
use num_traits::{One, Zero};

/// Solve `a x = b` exactly. Returns `None` when the matrix is singular.
/// `a` is row-major and consumed.
#[allow(clippy::needless_range_loop)] // elimination touches two rows at once
pub(crate) fn solve_rational(
    mut a: Vec<Vec<BigRational>>,
    mut b: Vec<BigRational>,
) -> Option<Vec<BigRational>> {
    let n = a.len();
    debug_assert!(a.iter().all(|row| row.len() == n) && b.len() == n);
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        b[col] *= &inv;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n {
                    let t = &a[col][c] * &f;
                    a[r][c] -= t;
                }
                let t = &b[col] * &f;
                b[r] -= t;
            }
        }
    }
    Some(b)
}

/// Exact inverse of a square rational matrix; `None` when singular.
#[allow(clippy::needless_range_loop)] // elimination touches two rows at once
pub(crate) fn invert_rational(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut aug: Vec<Vec<BigRational>> = a.to_vec();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { BigRational::one() } else { BigRational::zero() })
                .collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        inv.swap(col, pivot);
        let piv_inv = aug[col][col].recip();
        for v in aug[col].iter_mut() {
            *v *= &piv_inv;
        }
        for v in inv[col].iter_mut() {
            *v *= &piv_inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in 0..n {
                    let t = &aug[col][c] * &f;
                    aug[r][c] -= t;
                    let t = &inv[col][c] * &f;
                    inv[r][c] -= t;
                }
            }
        }
    }
    Some(inv)
}
