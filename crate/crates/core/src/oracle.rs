//! Independent reference computations used by the test suites and the
//! `verify` command. Nothing here calls into the kernels.

use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Plain `O(n³)` product, summed in increasing k from zero.
pub fn naive_mul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols(), b.rows(), "inner dimensions");
    let mut out = Matrix::zeros(a.rows(), b.cols(), a.kind());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = Scalar::zero(a.kind());
            for k in 0..a.cols() {
                acc = &acc + &(a.get(i, k) * b.get(k, j));
            }
            out.set(i, j, acc);
        }
    }
    out
}

/// ‖QᵀQ − I‖_F.
pub fn orthogonality_defect(q: &Matrix) -> f64 {
    let qtq = naive_mul(&q.transpose(), q);
    qtq.frobenius_distance(&Matrix::identity(q.rows(), q.kind()))
        .expect("square")
}

/// ‖X·Y − Z‖_F / ‖Z‖_F (absolute when ‖Z‖_F = 0).
pub fn relative_residual(x: &Matrix, y: &Matrix, z: &Matrix) -> f64 {
    let d = naive_mul(x, y).frobenius_distance(z).expect("shape");
    let n = z.frobenius_norm();
    if n == 0.0 { d } else { d / n }
}

/// Unrotated Givens sweep that zeroes column entries bottom-to-top with
/// textbook rotations on a plain `Vec<f64>` copy. Returns `R` only.
pub fn givens_sweep_r(a: &Matrix) -> Vec<Vec<f64>> {
    let (rows, cols) = (a.rows(), a.cols());
    let mut m: Vec<Vec<f64>> = (0..rows)
        .map(|i| (0..cols).map(|j| a.get(i, j).to_f64()).collect())
        .collect();
    for j in 0..cols.min(rows) {
        for i in (j..rows - 1).rev() {
            let (x, y) = (m[i][j], m[i + 1][j]);
            if y == 0.0 {
                continue;
            }
            let r = x.hypot(y);
            let (c, s) = (x / r, y / r);
            for k in 0..cols {
                let (u, v) = (m[i][k], m[i + 1][k]);
                m[i][k] = c * u + s * v;
                m[i + 1][k] = -s * u + c * v;
            }
            m[i + 1][j] = 0.0;
        }
    }
    m
}
