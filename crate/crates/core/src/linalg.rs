//! Dense symmetric matrices of the size of the parameter vector.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major square matrix.
pub type Matrix<T> = Vec<Vec<T>>;

pub fn zeros<T: Scalar>(k: usize) -> Matrix<T> {
    vec![vec![T::zero(); k]; k]
}

pub fn identity<T: Scalar>(k: usize) -> Matrix<T> {
    let mut m = zeros(k);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn mat_vec<T: Scalar>(m: &Matrix<T>, v: &[T]) -> Vec<T> {
    m.iter().map(|row| dot(row, v)).collect()
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Lower Cholesky factor, or the index of the first column whose pivot
/// vanishes relative to its diagonal entry.
pub fn cholesky<T: Scalar>(a: &Matrix<T>) -> std::result::Result<Matrix<T>, usize> {
    let k = a.len();
    let tol = T::of(1e-10);
    let mut l = zeros(k);
    for j in 0..k {
        let mut d = a[j][j];
        for m in 0..j {
            d = d - l[j][m] * l[j][m];
        }
        if !(d > tol * a[j][j].abs()) || a[j][j] <= T::zero() {
            return Err(j);
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in j + 1..k {
            let mut s = a[i][j];
            for m in 0..j {
                s = s - l[i][m] * l[j][m];
            }
            l[i][j] = s / djj;
        }
    }
    Ok(l)
}

fn solve_lower<T: Scalar>(l: &Matrix<T>, b: &[T]) -> Vec<T> {
    let mut y = vec![T::zero(); b.len()];
    for i in 0..b.len() {
        let mut s = b[i];
        for m in 0..i {
            s = s - l[i][m] * y[m];
        }
        y[i] = s / l[i][i];
    }
    y
}

fn solve_upper_t<T: Scalar>(l: &Matrix<T>, y: &[T]) -> Vec<T> {
    let k = y.len();
    let mut x = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = y[i];
        for m in i + 1..k {
            s = s - l[m][i] * x[m];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive definite matrix.
///
/// On failure the offending column is named together with the earlier
/// columns it is (numerically) a combination of.
pub fn inverse_spd<T: Scalar>(a: &Matrix<T>, names: &[String]) -> Result<Matrix<T>> {
    let k = a.len();
    let l = match cholesky(a) {
        Ok(l) => l,
        Err(j) => return Err(collinearity_error(a, j, names)),
    };
    let mut inv = zeros(k);
    for c in 0..k {
        let mut e = vec![T::zero(); k];
        e[c] = T::one();
        let col = solve_upper_t(&l, &solve_lower(&l, &e));
        for r in 0..k {
            inv[r][c] = col[r];
        }
    }
    // symmetrize away rounding
    for r in 0..k {
        for c in r + 1..k {
            let m = (inv[r][c] + inv[c][r]) / T::of(2.0);
            inv[r][c] = m;
            inv[c][r] = m;
        }
    }
    Ok(inv)
}

fn collinearity_error<T: Scalar>(a: &Matrix<T>, j: usize, names: &[String]) -> Error {
    let name = |i: usize| names.get(i).cloned().unwrap_or_else(|| format!("#{i}"));
    if a[j][j] == T::zero() {
        return Error::ZeroColumn { column: name(j) };
    }
    // regress column j on the leading block (which factored fine)
    let lead: Matrix<T> = a[..j].iter().map(|r| r[..j].to_vec()).collect();
    let others = match cholesky(&lead) {
        Ok(l) if j > 0 => {
            let rhs: Vec<T> = (0..j).map(|i| a[i][j]).collect();
            let coef = solve_upper_t(&l, &solve_lower(&l, &rhs));
            coef.iter()
                .enumerate()
                .filter(|(_, c)| c.abs() > T::of(1e-8))
                .map(|(i, _)| name(i))
                .collect()
        }
        _ => (0..j).map(name).collect(),
    };
    Error::Singular { column: name(j), others }
}
