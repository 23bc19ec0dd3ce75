//! Small dense helpers on top of faer.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef};

pub type CMat = Mat<c64>;

pub fn czero() -> c64 {
    c64::new(0.0, 0.0)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn from_diag(d: &[c64]) -> CMat {
    let n = d.len();
    Mat::from_fn(n, n, |i, j| if i == j { d[i] } else { czero() })
}

/// diag(d) · m
pub fn diag_left(d: &[c64], m: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// m · diag(d)
pub fn diag_right(m: MatRef<'_, c64>, d: &[c64]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * d[j])
}

/// diag(l) · m · diag(r)
pub fn diag_sandwich(l: &[c64], m: MatRef<'_, c64>, r: &[c64]) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| l[i] * m[(i, j)] * r[j])
}

pub fn block(m: MatRef<'_, c64>, r0: usize, c0: usize, nr: usize, nc: usize) -> CMat {
    m.submatrix(r0, c0, nr, nc).to_owned()
}

pub fn conj(m: MatRef<'_, c64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].conj())
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

pub fn trace(m: MatRef<'_, c64>) -> c64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Inverse through an LU factorisation with partial pivoting.
pub fn inverse(m: MatRef<'_, c64>) -> CMat {
    m.partial_piv_lu().inverse()
}

/// Solves m x = rhs.
pub fn solve(m: MatRef<'_, c64>, rhs: MatRef<'_, c64>) -> CMat {
    m.partial_piv_lu().solve(rhs)
}

/// max |M J M† - J| for J = diag(signs).
pub fn symplectic_defect(m: MatRef<'_, c64>, signs: &[f64]) -> f64 {
    let n = m.nrows();
    let mj = Mat::from_fn(n, m.ncols(), |i, j| m[(i, j)] * signs[j]);
    let prod = &mj * m.adjoint();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { signs[i] } else { 0.0 };
            worst = worst.max((prod[(i, j)] - c64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Sign pattern (+1 × n, -1 × n) repeated `groups` times.
pub fn ladder_signs(n: usize, groups: usize) -> Vec<f64> {
    let mut s = Vec::with_capacity(2 * n * groups);
    for _ in 0..groups {
        s.extend(std::iter::repeat_n(1.0, n));
        s.extend(std::iter::repeat_n(-1.0, n));
    }
    s
}
