//! BFGS minimizer with a derivative-driven weak-Wolfe line search.
//!
//! Near the optimum of a sum over thousands of cells, function differences
//! drop below rounding long before the gradient meets a tight tolerance, so
//! the line search also accepts steps that satisfy the approximate Wolfe
//! conditions (decrease measured through the directional derivative).

use crate::error::{Error, Result};
use crate::linalg::{dot, identity, mat_vec, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Stop when the gradient sup-norm falls below this.
    pub grad_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iter: 200,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BfgsResult<T> {
    pub x: Vec<T>,
    pub f: T,
    pub grad: Vec<T>,
    pub iterations: usize,
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Minimizes `f`; `eval(x, grad)` returns `f(x)` and writes the gradient.
pub fn minimize<T, F>(mut eval: F, x0: &[T], opts: BfgsOptions) -> Result<BfgsResult<T>>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let k = x0.len();
    let tol = T::of(opts.grad_tol);
    let mut x = x0.to_vec();
    let mut g = vec![T::zero(); k];
    let mut f = eval(&x, &mut g);
    let mut h: Matrix<T> = identity(k);
    let mut first = true;

    for iter in 0..opts.max_iter {
        if sup_norm(&g) < tol {
            return Ok(BfgsResult { x, f, grad: g, iterations: iter });
        }
        let mut d: Vec<T> = mat_vec(&h, &g).into_iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            h = identity(k);
            first = true;
            d = g.iter().map(|&v| -v).collect();
            slope = dot(&g, &d);
        }
        let alpha0 = if first {
            T::one() / T::one().max(dot(&g, &g).sqrt())
        } else {
            T::one()
        };
        let (alpha, f_new, g_new) =
            line_search(&mut eval, &x, f, slope, &d, alpha0).ok_or(Error::LineSearch { iteration: iter })?;

        let s: Vec<T> = d.iter().map(|&v| alpha * v).collect();
        let y: Vec<T> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = dot(&s, &y);
        let yy = dot(&y, &y);
        if sy > T::of(1e-14) * dot(&s, &s).sqrt() * yy.sqrt() {
            if first {
                let scale = sy / yy;
                h = identity::<T>(k).into_iter().map(|r| r.into_iter().map(|v| v * scale).collect()).collect();
                first = false;
            }
            bfgs_update(&mut h, &s, &y, sy);
        }
        for (xi, si) in x.iter_mut().zip(&s) {
            *xi = *xi + *si;
        }
        f = f_new;
        g = g_new;
    }
    if sup_norm(&g) < tol {
        return Ok(BfgsResult { x, f, grad: g, iterations: opts.max_iter });
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        grad_norm: sup_norm(&g).as_f64(),
    })
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ` with `ρ = 1 / sᵀy`.
fn bfgs_update<T: Scalar>(h: &mut Matrix<T>, s: &[T], y: &[T], sy: T) {
    let k = s.len();
    let rho = T::one() / sy;
    let hy = mat_vec(h, y);
    let yhy = dot(y, &hy);
    for i in 0..k {
        for j in 0..k {
            h[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn line_search<T, F>(eval: &mut F, x: &[T], f0: T, slope0: T, d: &[T], alpha0: T) -> Option<(T, T, Vec<T>)>
where
    T: Scalar,
    F: FnMut(&[T], &mut [T]) -> T,
{
    let c1 = T::of(1e-4);
    let c2 = T::of(0.9);
    let eps = T::of(1e-10) * (T::one() + f0.abs());
    let mut lo = T::zero();
    let mut hi = T::infinity();
    let mut alpha = alpha0;
    let mut xt = vec![T::zero(); x.len()];
    let mut gt = vec![T::zero(); x.len()];
    for _ in 0..80 {
        for i in 0..x.len() {
            xt[i] = x[i] + alpha * d[i];
        }
        let ft = eval(&xt, &mut gt);
        let slope = dot(&gt, d);
        let finite = ft.is_finite() && slope.is_finite();
        let armijo = finite && ft <= f0 + c1 * alpha * slope0;
        let approx = finite && ft <= f0 + eps && slope <= (T::of(2.0) * c1 - T::one()) * slope0;
        if !(armijo || approx) {
            hi = alpha;
        } else if slope < c2 * slope0 {
            lo = alpha;
        } else {
            return Some((alpha, ft, gt));
        }
        alpha = if hi.is_finite() {
            (lo + hi) / T::of(2.0)
        } else {
            alpha * T::of(2.0)
        };
        if hi.is_finite() && hi - lo <= T::epsilon() * hi {
            break;
        }
    }
    None
}
