//! Small dense linear-algebra helpers shared across modules.
//!
//! nalgebra computes thin SVDs, so the right-singular-vector block of a wide
//! matrix omits part of the null space. Everything here pads wide matrices
//! with zero rows first, which leaves singular values and kernels unchanged.

use nalgebra::{Complex, DMatrix, DVector};

use crate::laurent::C64;

fn pad_square_real(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut out = DMatrix::zeros(m.ncols(), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

fn pad_square_complex(m: &DMatrix<C64>) -> DMatrix<C64> {
    if m.nrows() >= m.ncols() {
        return m.clone();
    }
    let mut out = DMatrix::zeros(m.ncols(), m.ncols());
    out.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    out
}

/// Smallest and largest singular value.
pub fn sigma_extremes_complex(m: &DMatrix<C64>) -> (f64, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0.0, 0.0);
    }
    let sv = pad_square_complex(m).singular_values();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in sv.iter() {
        lo = lo.min(*s);
        hi = hi.max(*s);
    }
    (lo, hi)
}

/// Orthonormal basis of the numerical kernel: right singular vectors with
/// sigma < rank_tol * max(1, sigma_max).
pub fn kernel_complex(m: &DMatrix<C64>, rank_tol: f64) -> Vec<DVector<C64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = Complex::new(1.0, 0.0);
                v
            })
            .collect();
    }
    let padded = pad_square_complex(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("V^T requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = rank_tol * smax.max(1.0);
    let mut out = Vec::new();
    for i in 0..vt.nrows() {
        if svd.singular_values[i] < thr {
            out.push(vt.row(i).map(|z| z.conj()).transpose().into_owned());
        }
    }
    out
}

pub fn kernel_real(m: &DMatrix<f64>, rank_tol: f64) -> Vec<DVector<f64>> {
    let n = m.ncols();
    if n == 0 {
        return Vec::new();
    }
    if m.nrows() == 0 {
        return (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect();
    }
    let padded = pad_square_real(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("V^T requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = rank_tol * smax.max(1.0);
    let mut out = Vec::new();
    for i in 0..vt.nrows() {
        if svd.singular_values[i] < thr {
            out.push(vt.row(i).transpose().into_owned());
        }
    }
    out
}

/// Numerical rank with threshold sigma > rank_tol * max(1, sigma_max).
pub fn rank_complex(m: &DMatrix<C64>, rank_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let thr = rank_tol * smax.max(1.0);
    sv.iter().filter(|&&s| s > thr).count()
}

/// Orthonormal basis of the column span of `cols`, with numerical rank
/// decided by rank_tol. Returns an empty set for all-zero input.
pub fn orthonormal_span(cols: &[DVector<C64>], rank_tol: f64) -> Vec<DVector<C64>> {
    if cols.is_empty() {
        return Vec::new();
    }
    let n = cols[0].len();
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let svd = m.svd(true, false);
    let u = svd.u.expect("U requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vec::new();
    }
    let thr = rank_tol * smax.max(1.0);
    let mut out = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] > thr {
            out.push(u.column(i).into_owned());
        }
    }
    out
}

/// Least-squares solution of A x = b via SVD pseudo-inverse; also returns
/// the residual norm and the smallest/largest singular values of A.
pub fn lstsq(a: &DMatrix<C64>, b: &DVector<C64>, rank_tol: f64) -> (DVector<C64>, f64, f64, f64) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U");
    let vt = svd.v_t.as_ref().expect("V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let thr = rank_tol * smax.max(1.0);
    let k = svd.singular_values.len();
    let mut x = DVector::zeros(a.ncols());
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > thr {
            let ui = u.column(i);
            let coeff = ui.iter().zip(b.iter()).map(|(uij, bj)| uij.conj() * bj).sum::<C64>() / Complex::new(s, 0.0);
            for j in 0..a.ncols() {
                x[j] += vt[(i, j)].conj() * coeff;
            }
        }
    }
    let res = (a * &x - b).norm();
    (x, res, if smin.is_finite() { smin } else { 0.0 }, smax)
}
