//! Dense kernels on small symmetric matrices: Cholesky with an explicit pivot
//! tolerance, triangular solves and Jacobi eigenvalues.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Pivots below this multiple of the largest diagonal entry are rejected.
pub const PIVOT_TOLERANCE: f64 = 1e-10;

/// Failure of [`cholesky`]: position of the offending pivot and its value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PivotFailure {
    pub position: usize,
    pub pivot: f64,
    pub tolerance: f64,
}

/// Lower-triangular `F` with `F F^T = a`.
///
/// No regularization is applied; a pivot `d_j` with `d_j <= tol * max_i a_ii`
/// fails the factorization.
pub fn cholesky(a: ArrayView2<'_, f64>) -> Result<Array2<f64>, PivotFailure> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "cholesky needs a square matrix");
    let max_diag = (0..n).map(|i| a[[i, i]]).fold(0.0f64, f64::max);
    let tol = PIVOT_TOLERANCE * max_diag;
    let mut f = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= f[[j, k]] * f[[j, k]];
        }
        if !(d > tol) || max_diag <= 0.0 {
            return Err(PivotFailure {
                position: j,
                pivot: d,
                tolerance: tol,
            });
        }
        let djj = d.sqrt();
        f[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= f[[i, k]] * f[[j, k]];
            }
            f[[i, j]] = s / djj;
        }
    }
    Ok(f)
}

/// Solves `F w = v` for lower-triangular `F`.
pub fn forward_solve(f: ArrayView2<'_, f64>, v: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = f.nrows();
    let mut w = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = v[i];
        for k in 0..i {
            s -= f[[i, k]] * w[k];
        }
        w[i] = s / f[[i, i]];
    }
    w
}

/// `F x` for lower-triangular `F`.
pub fn lower_mul(f: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> Array1<f64> {
    let n = f.nrows();
    Array1::from_iter((0..n).map(|i| (0..=i).map(|k| f[[i, k]] * x[k]).sum()))
}

/// Eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: ArrayView2<'_, f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.to_owned();
    let scale: f64 = m
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[[i, j]] * m[[i, j]])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
