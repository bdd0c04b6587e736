//! Fraction-free (Bareiss) elimination over the integers.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::rational::{lcm_of_denominators, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular;

/// Solves `matrix · x = rhs` exactly.
///
/// Each row is first scaled to integers, then reduced with Bareiss
/// elimination. The pivot in each column is the first nonzero entry at or
/// below the diagonal, so the elimination order is fixed by the row order.
pub fn solve(matrix: &[Vec<BigInt>], rhs: &[Rational]) -> Result<Vec<Rational>, Singular> {
    let n = matrix.len();
    assert_eq!(rhs.len(), n, "rhs length mismatch");
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut aug: Vec<Vec<BigInt>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            assert_eq!(row.len(), n, "matrix is not square");
            let scale = lcm_of_denominators(std::iter::once(b));
            let mut r: Vec<BigInt> = row.iter().map(|x| x * &scale).collect();
            r.push(b.numer() * (&scale / b.denom()));
            r
        })
        .collect();

    let mut prev = BigInt::one();
    for k in 0..n {
        let pivot_row = (k..n).find(|&i| !aug[i][k].is_zero()).ok_or(Singular)?;
        aug.swap(k, pivot_row);
        for i in k + 1..n {
            for j in k + 1..=n {
                let v = (&aug[i][j] * &aug[k][k] - &aug[i][k] * &aug[k][j]) / &prev;
                aug[i][j] = v;
            }
            aug[i][k] = BigInt::zero();
        }
        prev = aug[k][k].clone();
    }

    let mut x = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        let mut acc = Rational::from_bigint(aug[i][n].clone());
        for j in i + 1..n {
            acc -= Rational::from_bigint(aug[i][j].clone()) * &x[j];
        }
        x[i] = acc / Rational::from_bigint(aug[i][i].clone());
    }
    Ok(x)
}

/// Leading principal minors `det(M[..k, ..k])` for `k = 1..=n`.
///
/// Bareiss elimination without row exchanges produces exactly these minors
/// as its successive pivots. Once a minor vanishes the remaining ones are not
/// computed and the returned vector is shorter than `n`, ending in that zero.
pub fn leading_principal_minors(matrix: &[Vec<BigInt>]) -> Vec<BigInt> {
    let n = matrix.len();
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut prev = BigInt::one();
    let mut minors = Vec::with_capacity(n);
    for k in 0..n {
        minors.push(a[k][k].clone());
        if a[k][k].is_zero() {
            break;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    minors
}

/// Exact determinant via Bareiss with row exchanges.
pub fn determinant(matrix: &[Vec<BigInt>]) -> BigInt {
    let n = matrix.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut prev = BigInt::one();
    let mut sign = BigInt::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !a[i][k].is_zero()) else {
            return BigInt::zero();
        };
        if p != k {
            a.swap(p, k);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&a[i][j] * &a[k][k] - &a[i][k] * &a[k][j]) / &prev;
                a[i][j] = v;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Negative definiteness by Sylvester's criterion: `(-1)^k · minor_k > 0` for all `k`.
pub fn is_negative_definite(matrix: &[Vec<BigInt>]) -> bool {
    let n = matrix.len();
    let minors = leading_principal_minors(matrix);
    minors.len() == n
        && minors.iter().enumerate().all(|(k, m)| {
            let signed = if k % 2 == 0 { -m } else { m.clone() };
            signed.is_positive()
        })
}

pub fn to_big(matrix: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    matrix
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}
