use crate::error::{Error, Result};
use crate::matrix::{Matrix, Quadrants};
use crate::par;

use super::{multiply, mul_neg, require_square_pow2, KernelConfig, OpCounter};

/// Forward substitution: solves `L X = I` column by column.
/// A zero diagonal entry yields `Singular(local index)`.
pub(crate) fn leaf_inv_lower(l: &Matrix, ctr: &mut OpCounter) -> Result<Matrix> {
    let n = l.rows();
    let kind = l.kind();
    let mut x = Matrix::zeros(n, n, kind);
    let mut diag_inv = Vec::with_capacity(n);
    for i in 0..n {
        diag_inv.push(l.get(i, i).recip().ok_or(Error::Singular(i))?);
        ctr.div_count += 1;
    }
    for j in 0..n {
        x.set(j, j, diag_inv[j].clone());
        for i in j + 1..n {
            let mut s = crate::scalar::Scalar::zero(kind);
            for k in j..i {
                s = &s + &(l.get(i, k) * x.get(k, j));
                ctr.mul_count += 1;
                ctr.addsub_count += 1;
            }
            x.set(i, j, &(-&s) * &diag_inv[i]);
            ctr.mul_count += 1;
        }
    }
    Ok(x)
}

/// Inverse of a lower triangular matrix via
/// `[[A, 0], [B, C]]⁻¹ = [[A⁻¹, 0], [−C⁻¹·(B·A⁻¹), C⁻¹]]`.
pub fn inv_lower_triangular(a: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    cfg.validate()?;
    let n = require_square_pow2(a, "inv_lower_triangular")?;
    if !a.is_lower_triangular() {
        return Err(Error::PreconditionViolated("matrix is not lower triangular".into()));
    }
    if let Some(i) = (0..n).find(|&i| a.get(i, i).is_zero()) {
        return Err(Error::Singular(i));
    }
    recurse(a, cfg, ctr)
}

pub(crate) fn recurse(a: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    let n = a.rows();
    if n <= cfg.leaf_size {
        return leaf_inv_lower(a, ctr);
    }
    let Quadrants { a0, a2, a3, .. } = a.split()?;
    let ((f, cf), (g, cg)) = par::join(
        cfg.fork(n),
        || {
            let mut c = OpCounter::new();
            (recurse(&a0, cfg, &mut c), c)
        },
        || {
            let mut c = OpCounter::new();
            (recurse(&a3, cfg, &mut c), c)
        },
    );
    ctr.merge(&cf);
    ctr.merge(&cg);
    let (f, g) = (f?, g?);
    let h = multiply(&a2, &f, cfg, ctr)?;
    let x = mul_neg(&g, &h, cfg, ctr)?;
    let zero = Matrix::zeros(n / 2, n / 2, a.kind());
    Matrix::join(&Quadrants { a0: f, a1: zero, a2: x, a3: g })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::naive_mul;
    use crate::scalar::{Scalar, ScalarKind};

    #[test]
    fn identity_is_fixed() {
        let i = Matrix::identity(8, ScalarKind::Rat);
        let inv = inv_lower_triangular(&i, &KernelConfig::with_leaf(2), &mut OpCounter::new()).unwrap();
        assert!(inv.is_identity());
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = Matrix::from_i64(2, 2, &[2, 0, 1, 4], ScalarKind::Rat);
        for leaf in [1, 2] {
            let inv = inv_lower_triangular(&a, &KernelConfig::with_leaf(leaf), &mut OpCounter::new()).unwrap();
            assert_eq!(*inv.get(0, 0), Scalar::ratio(1, 2));
            assert!(inv.get(0, 1).is_zero());
            assert_eq!(*inv.get(1, 0), Scalar::ratio(-1, 8));
            assert_eq!(*inv.get(1, 1), Scalar::ratio(1, 4));
            assert!(naive_mul(&a, &inv).is_identity());
        }
    }

    #[test]
    fn zero_diagonal_is_singular() {
        let a = Matrix::from_i64(2, 2, &[1, 0, 5, 0], ScalarKind::Rat);
        assert_eq!(
            inv_lower_triangular(&a, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::Singular(1))
        );
    }

    #[test]
    fn rejects_upper_entries() {
        let a = Matrix::from_i64(2, 2, &[1, 1, 0, 1], ScalarKind::Rat);
        assert!(matches!(
            inv_lower_triangular(&a, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn exact_inverse_over_rationals() {
        for seed in 0..4 {
            let a = gen::random_lower_triangular(16, ScalarKind::Rat, seed);
            let inv = inv_lower_triangular(&a, &KernelConfig::with_leaf(2), &mut OpCounter::new()).unwrap();
            assert!(naive_mul(&inv, &a).is_identity());
            assert!(inv.is_lower_triangular());
        }
    }
}
