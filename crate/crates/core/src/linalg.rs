//! Small dense helpers on top of faer.

use faer::linalg::matmul::matmul;
use faer::linalg::triangular_solve::{solve_lower_triangular_in_place, solve_upper_triangular_in_place};
use faer::{Accum, Mat, MatRef, Par, Side};
use num_complex::Complex64;

pub fn gemm(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut c = Mat::<f64>::zeros(a.nrows(), b.ncols());
    matmul(c.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    c
}

/// `a^T b`
pub fn gemm_tn(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    gemm(a.transpose(), b)
}

/// `a b a^T`
pub fn sandwich(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let ab = gemm(a, b);
    let mut out = gemm(ab.as_ref(), a.transpose());
    symmetrize(&mut out);
    out
}

pub fn symmetrize(m: &mut Mat<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Lower Cholesky factor, `None` if the matrix is not numerically positive definite.
pub fn cholesky(m: &Mat<f64>) -> Option<Mat<f64>> {
    let llt = m.llt(Side::Lower).ok()?;
    Some(llt.L().to_owned())
}

/// `L^{-1} B`
pub fn solve_lower(l: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut x = b.clone();
    solve_lower_triangular_in_place(l.as_ref(), x.as_mut(), Par::Seq);
    x
}

/// `L^{-T} B`
pub fn solve_lower_t(l: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let mut x = b.clone();
    solve_upper_triangular_in_place(l.transpose(), x.as_mut(), Par::Seq);
    x
}

/// `L^{-1} M L^{-T}`
pub fn congruence_inv(l: &Mat<f64>, m: &Mat<f64>) -> Mat<f64> {
    let y = solve_lower(l, m);
    let mut z = solve_lower(l, &y.transpose().to_owned());
    symmetrize(&mut z);
    z
}

/// Eigenvalues in nondecreasing order.
pub fn sym_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    m.self_adjoint_eigenvalues(Side::Lower).unwrap_or_else(|_| vec![f64::NAN; m.nrows()])
}

/// Eigenvalues (nondecreasing) and eigenvectors as columns.
pub fn sym_eigen(m: &Mat<f64>) -> Option<(Vec<f64>, Mat<f64>)> {
    let e = m.self_adjoint_eigen(Side::Lower).ok()?;
    let vals = (0..m.nrows()).map(|i| e.S().column_vector()[i]).collect();
    Some((vals, e.U().to_owned()))
}

pub fn herm_eigen(m: &Mat<Complex64>) -> Option<(Vec<f64>, Mat<Complex64>)> {
    let e = m.self_adjoint_eigen(Side::Lower).ok()?;
    let vals = (0..m.nrows()).map(|i| e.S().column_vector()[i].re).collect();
    Some((vals, e.U().to_owned()))
}

pub fn herm_eigenvalues(m: &Mat<Complex64>) -> Vec<f64> {
    m.self_adjoint_eigenvalues(Side::Lower).unwrap_or_else(|_| vec![f64::NAN; m.nrows()])
}

pub fn min_eigenvalue(m: &Mat<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_eigenvalues(m)[0]
}

/// Frobenius inner product.
pub fn dot(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

pub fn fro_norm(a: &Mat<f64>) -> f64 {
    dot(a, a).sqrt()
}

pub fn identity(n: usize) -> Mat<f64> {
    Mat::<f64>::identity(n, n)
}
