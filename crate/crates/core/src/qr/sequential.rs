use crate::error::{Error, Result};
use crate::kernels::OpCounter;
use crate::matrix::Matrix;
use crate::scalar::ScalarKind;

use super::givens::{count_givens, givens2, rotate_rows};
use super::QRResult;

/// Column-by-column Givens elimination. Within column `k` the rotations
/// run bottom-to-top over row pairs `(n−2, n−1), …, (k, k+1)`; each writes
/// an exact zero. `Q` is the transpose of the accumulated rotations.
pub fn qr_sequential(a: &Matrix) -> Result<QRResult> {
    let mut ctr = OpCounter::new();
    let (q, r) = sequential_with(a, &mut ctr)?;
    Ok(QRResult { q, r, counter: ctr })
}

pub(crate) fn sequential_with(a: &Matrix, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    if !a.is_square() {
        return Err(Error::InvalidShape(format!("qr_sequential needs a square matrix, got {}x{}", a.rows(), a.cols())));
    }
    if a.kind() != ScalarKind::F64 {
        return Err(Error::UnsupportedScalar("QR needs f64 scalars".into()));
    }
    let n = a.rows();
    let mut r = a.clone();
    let mut qt = Matrix::identity(n, ScalarKind::F64);
    for k in 0..n.saturating_sub(1) {
        for i in (k..n - 1).rev() {
            let (g, _) = givens2(r.get(i, k), r.get(i + 1, k))?;
            if g.is_identity() {
                continue;
            }
            count_givens(ctr);
            rotate_rows(&mut r, i, i + 1, g, k, true, ctr);
            rotate_rows(&mut qt, i, i + 1, g, 0, false, ctr);
        }
    }
    Ok((qt.transpose(), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{givens_sweep_r, orthogonality_defect, relative_residual};

    #[test]
    fn upper_triangular_input_is_untouched() {
        let mut a = gen::random_dense(6, ScalarKind::F64, 3);
        for i in 0..6 {
            for j in 0..i {
                a.set(i, j, crate::Scalar::F64(0.0));
            }
        }
        let res = qr_sequential(&a).unwrap();
        assert!(res.q.is_identity());
        assert!(res.r.bitwise_eq(&a));
    }

    #[test]
    fn single_rotation() {
        let a = Matrix::from_f64(2, 2, &[6.0, 5.0, 8.0, 10.0]);
        let res = qr_sequential(&a).unwrap();
        let q = res.q.to_f64_vec();
        let r = res.r.to_f64_vec();
        for (x, w) in q.iter().zip([0.6, -0.8, 0.8, 0.6]) {
            assert!((x - w).abs() <= 1e-15);
        }
        for (x, w) in r.iter().zip([10.0, 11.0, 0.0, 2.0]) {
            assert!((x - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn seeded_properties() {
        for seed in 0..5 {
            let a = gen::random_dense(8, ScalarKind::F64, seed);
            let res = qr_sequential(&a).unwrap();
            assert!(res.r.is_upper_triangular());
            assert!(relative_residual(&res.q, &res.r, &a) <= 1e-10);
            assert!(orthogonality_defect(&res.q) <= 1e-12);
            let oracle = givens_sweep_r(&a);
            for i in 0..8 {
                for j in 0..8 {
                    assert!((res.r.get(i, j).to_f64() - oracle[i][j]).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_column_is_fine() {
        let a = Matrix::from_f64(3, 3, &[0.0, 1.0, 2.0, 0.0, 3.0, 4.0, 0.0, 5.0, 6.0]);
        let res = qr_sequential(&a).unwrap();
        assert!(res.r.is_upper_triangular());
        assert!(relative_residual(&res.q, &res.r, &a) <= 1e-12);
    }
}
